#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "fracle/errors.hpp"
#include "json.hpp"

namespace fracle::io {

using Json = nlohmann::ordered_json;

// Shortest form that keeps 17 significant digits; locale independent.
inline std::string formatDouble(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
    return std::string(buf, r.ptr);
}

inline double parseDouble(const std::string& s) {
    double x = 0.0;
    const char* b = s.data();
    const char* e = b + s.size();
    while (b < e && *b == ' ') ++b;
    const auto r = std::from_chars(b, e, x);
    if (r.ec != std::errc() || r.ptr != e) throw DomainError("not a number: '" + s + "'");
    return x;
}

class Csv {
public:
    explicit Csv(std::vector<std::string> header) : header_(std::move(header)) {}

    Csv& row() {
        rows_.emplace_back();
        return *this;
    }
    Csv& operator<<(double x) { return push(formatDouble(x)); }
    Csv& operator<<(int x) { return push(std::to_string(x)); }
    Csv& operator<<(long x) { return push(std::to_string(x)); }
    Csv& operator<<(bool x) { return push(x ? "1" : "0"); }
    Csv& operator<<(const std::string& x) { return push(x); }
    Csv& operator<<(const char* x) { return push(x); }

    std::size_t rows() const { return rows_.size(); }

    std::string str() const {
        std::string out;
        auto line = [&](const std::vector<std::string>& cells) {
            for (std::size_t k = 0; k < cells.size(); ++k) {
                if (k) out += ',';
                out += cells[k];
            }
            out += '\n';
        };
        line(header_);
        for (const auto& r : rows_) line(r);
        return out;
    }

private:
    Csv& push(std::string cell) {
        if (rows_.empty()) throw ContractViolation("Csv: row() must precede cells");
        if (rows_.back().size() == header_.size()) throw ContractViolation("Csv: too many cells in row");
        rows_.back().push_back(std::move(cell));
        return *this;
    }

    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

inline std::string sha256(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw NumericalError("sha256: digest failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return os.str();
}

struct Series {
    std::string name;
    std::vector<double> x, y;
};

struct PlotSpec {
    std::string title, xlabel, ylabel;
    bool logX = false, logY = false;
};

// Minimal SVG line chart: one polyline per series, axis box and tick labels.
inline std::string svgPlot(const PlotSpec& spec, const std::vector<Series>& series) {
    const double W = 640, H = 420, ml = 70, mr = 20, mt = 40, mb = 50;
    auto tx = [&](double v) { return spec.logX ? std::log10(v) : v; };
    auto ty = [&](double v) { return spec.logY ? std::log10(v) : v; };
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& s : series)
        for (std::size_t k = 0; k < s.x.size(); ++k) {
            const double a = tx(s.x[k]), b = ty(s.y[k]);
            if (!std::isfinite(a) || !std::isfinite(b)) continue;
            x0 = std::min(x0, a), x1 = std::max(x1, a), y0 = std::min(y0, b), y1 = std::max(y1, b);
        }
    if (!(x0 < x1)) x0 -= 0.5, x1 += 0.5;
    if (!(y0 < y1)) y0 -= 0.5, y1 += 0.5;
    const double pad = 0.04 * (y1 - y0);
    y0 -= pad, y1 += pad;
    auto px = [&](double a) { return ml + (a - x0) / (x1 - x0) * (W - ml - mr); };
    auto py = [&](double b) { return H - mb - (b - y0) / (y1 - y0) * (H - mt - mb); };
    auto num = [](double v) {
        char buf[32];
        const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 4);
        return std::string(buf, r.ptr);
    };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << W - ml - mr << "\" height=\"" << H - mt - mb
       << "\" fill=\"none\" stroke=\"#444\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << spec.title << "</text>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << spec.xlabel
       << (spec.logX ? " (log10)" : "") << "</text>\n";
    os << "<text x=\"16\" y=\"" << H / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << H / 2 << ")\">"
       << spec.ylabel << (spec.logY ? " (log10)" : "") << "</text>\n";
    for (int k = 0; k <= 4; ++k) {
        const double a = x0 + k * (x1 - x0) / 4, b = y0 + k * (y1 - y0) / 4;
        os << "<text x=\"" << px(a) << "\" y=\"" << H - mb + 16 << "\" text-anchor=\"middle\">" << num(a) << "</text>\n";
        os << "<text x=\"" << ml - 6 << "\" y=\"" << py(b) + 4 << "\" text-anchor=\"end\">" << num(b) << "</text>\n";
    }
    for (std::size_t j = 0; j < series.size(); ++j) {
        const auto& s = series[j];
        os << "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" << colors[j % 6] << "\" points=\"";
        for (std::size_t k = 0; k < s.x.size(); ++k) {
            const double a = tx(s.x[k]), b = ty(s.y[k]);
            if (!std::isfinite(a) || !std::isfinite(b)) continue;
            os << num(px(a)) << ',' << num(py(b)) << ' ';
        }
        os << "\"/>\n";
        os << "<text x=\"" << W - mr - 8 << "\" y=\"" << mt + 16 + 14 * j << "\" text-anchor=\"end\" fill=\""
           << colors[j % 6] << "\">" << s.name << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

// Writes files under a root directory and keeps their hashes for the manifest.
class ArtifactWriter {
public:
    explicit ArtifactWriter(std::filesystem::path root) : root_(std::move(root)) {
        std::error_code ec;
        std::filesystem::create_directories(root_, ec);
        if (ec || !std::filesystem::is_directory(root_))
            throw DomainError("cannot create output directory '" + root_.string() + "'");
        const auto probe = root_ / ".write-probe";
        {
            std::ofstream f(probe);
            if (!f) throw DomainError("output directory '" + root_.string() + "' is not writable");
        }
        std::filesystem::remove(probe, ec);
    }

    const std::filesystem::path& root() const { return root_; }

    void write(const std::string& name, const std::string& content) {
        std::ofstream f(root_ / name, std::ios::binary);
        f << content;
        if (!f) throw DomainError("failed to write '" + (root_ / name).string() + "'");
        files_.push_back({name, sha256(content), content.size()});
    }
    void write(const std::string& name, const Csv& csv) { write(name, csv.str()); }
    void write(const std::string& name, const Json& j) { write(name, j.dump(2) + "\n"); }

    Json manifestFiles() const {
        Json arr = Json::array();
        for (const auto& f : files_) arr.push_back({{"path", f.name}, {"sha256", f.hash}, {"bytes", f.bytes}});
        return arr;
    }

private:
    struct Entry {
        std::string name, hash;
        std::size_t bytes;
    };
    std::filesystem::path root_;
    std::vector<Entry> files_;
};

} // namespace fracle::io
