#include "newsmon/report.hpp"

#include "newsmon/csv.hpp"
#include "newsmon/error.hpp"

#include <fmt/format.h>
#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace newsmon {

namespace fs = std::filesystem;

namespace {

constexpr double kWidth = 860.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 170.0;  // legend column
constexpr double kTop = 40.0;
constexpr double kBottom = 70.0;

constexpr std::array<const char*, 10> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string xml(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

// CDATA cannot contain "]]>"; split it if a label ever does.
std::string cdata(std::string_view s) {
    std::string out = "<![CDATA[";
    std::size_t pos = 0;
    while (true) {
        auto hit = s.find("]]>", pos);
        if (hit == std::string_view::npos) {
            out += s.substr(pos);
            break;
        }
        out += s.substr(pos, hit - pos);
        out += "]]]]><![CDATA[>";
        pos = hit + 3;
    }
    return out + "]]>";
}

struct Scale {
    double lo = 0.0;
    double hi = 1.0;
};

// Rounds the data range out to a 1/2/5 step so tick labels are short.
Scale nice_scale(double lo, double hi, double& step) {
    if (!(hi > lo)) {
        hi = lo + 1.0;
    }
    double raw = (hi - lo) / 5.0;
    double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double norm = raw / mag;
    step = (norm <= 1.0 ? 1.0 : norm <= 2.0 ? 2.0 : norm <= 5.0 ? 5.0 : 10.0) * mag;
    return {std::floor(lo / step) * step, std::ceil(hi / step) * step};
}

std::string tick_label(double v) {
    if (std::abs(v) < 1e-12) {
        return "0";
    }
    return fmt::format("{:.6g}", v);
}

std::string open_svg(const std::string& title, const std::string& table) {
    std::string out = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0:.0f}\" height=\"{1:.0f}\" viewBox=\"0 0 {0:.0f} {1:.0f}\" "
        "font-family=\"sans-serif\" font-size=\"11\">\n",
        kWidth, kHeight);
    out += "<title>" + xml(title) + "</title>\n";
    out += "<metadata id=\"data\">" + cdata(table) + "</metadata>\n";
    out += fmt::format("<rect width=\"{:.0f}\" height=\"{:.0f}\" fill=\"white\"/>\n", kWidth, kHeight);
    out += fmt::format("<text x=\"{:.2f}\" y=\"22\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n",
                       kLeft + (kWidth - kLeft - kRight) / 2.0, xml(title));
    return out;
}

// Axes, horizontal grid lines and y tick labels.
std::string axes(const Scale& s, double step, const std::string& y_label) {
    double plot_h = kHeight - kTop - kBottom;
    auto y_of = [&](double v) { return kTop + plot_h * (1.0 - (v - s.lo) / (s.hi - s.lo)); };
    std::string out;
    for (double v = s.lo; v <= s.hi + step * 1e-9; v += step) {
        double y = y_of(v);
        out += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"#e0e0e0\"/>\n", kLeft,
                           y, kWidth - kRight, y);
        out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{}</text>\n", kLeft - 6.0, y + 4.0,
                           tick_label(v));
    }
    out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"black\"/>\n", kLeft,
                       kTop, kHeight - kBottom);
    out += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"black\"/>\n", kLeft,
                       kHeight - kBottom, kWidth - kRight, kHeight - kBottom);
    out += fmt::format("<text transform=\"translate(16 {:.2f}) rotate(-90)\" text-anchor=\"middle\">{}</text>\n",
                       kTop + plot_h / 2.0, xml(y_label));
    return out;
}

// At most ~12 x labels so long daily axes stay legible.
std::size_t label_stride(std::size_t n) { return std::max<std::size_t>(1, (n + 11) / 12); }

} // namespace

std::string line_chart_svg(const std::string& title, const std::vector<std::string>& x_labels,
                           const std::vector<ChartSeries>& series, const std::string& y_label) {
    std::ostringstream table;
    csv::Row header{"x"};
    for (const auto& s : series) {
        header.push_back(s.name);
    }
    csv::write_row(table, header);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < x_labels.size(); ++i) {
        csv::Row row{x_labels[i]};
        for (const auto& s : series) {
            auto v = i < s.values.size() ? s.values[i] : std::nullopt;
            row.push_back(csv::real(v));
            if (v && std::isfinite(*v)) {
                lo = std::min(lo, *v);
                hi = std::max(hi, *v);
            }
        }
        csv::write_row(table, row);
    }
    if (!std::isfinite(lo)) {
        lo = 0.0;
        hi = 1.0;
    }
    double step = 1.0;
    auto scale = nice_scale(lo < 0.0 ? lo : 0.0, hi, step);  // non-negative data is anchored at zero
    std::string out = open_svg(title, table.str());
    out += axes(scale, step, y_label);

    double plot_w = kWidth - kLeft - kRight;
    double plot_h = kHeight - kTop - kBottom;
    std::size_t n = x_labels.size();
    auto x_of = [&](std::size_t i) { return kLeft + (n > 1 ? plot_w * static_cast<double>(i) / (n - 1) : plot_w / 2); };
    auto y_of = [&](double v) { return kTop + plot_h * (1.0 - (v - scale.lo) / (scale.hi - scale.lo)); };

    std::size_t stride = label_stride(n);
    for (std::size_t i = 0; i < n; i += stride) {
        out += fmt::format(
            "<text transform=\"translate({:.2f} {:.2f}) rotate(-45)\" text-anchor=\"end\">{}</text>\n", x_of(i),
            kHeight - kBottom + 14.0, xml(x_labels[i]));
    }
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* colour = kPalette[s % kPalette.size()];
        std::string path;
        bool pen_down = false;
        for (std::size_t i = 0; i < n && i < series[s].values.size(); ++i) {
            const auto& v = series[s].values[i];
            if (!v || !std::isfinite(*v)) {
                pen_down = false;
                continue;
            }
            path += fmt::format("{}{:.2f},{:.2f} ", pen_down ? "L" : "M", x_of(i), y_of(*v));
            pen_down = true;
        }
        if (!path.empty()) {
            path.pop_back();
            out += fmt::format("<path d=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n", path, colour);
        }
        double ly = kTop + 16.0 * static_cast<double>(s);
        out += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"12\" height=\"3\" fill=\"{}\"/>\n",
                           kWidth - kRight + 12.0, ly + 4.0, colour);
        out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\">{}</text>\n", kWidth - kRight + 30.0, ly + 9.0,
                           xml(series[s].name));
    }
    out += "</svg>\n";
    return out;
}

std::string bar_chart_svg(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<double>& values, const std::string& y_label) {
    if (labels.size() != values.size()) {
        throw UsageError("bar chart needs one value per label");
    }
    std::ostringstream table;
    csv::write_row(table, {"label", "value"});
    double hi = 0.0;
    double lo = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        csv::write_row(table, {labels[i], csv::real(values[i])});
        hi = std::max(hi, values[i]);
        lo = std::min(lo, values[i]);
    }
    double step = 1.0;
    auto scale = nice_scale(lo, hi, step);
    std::string out = open_svg(title, table.str());
    out += axes(scale, step, y_label);

    double plot_w = kWidth - kLeft - kRight;
    double plot_h = kHeight - kTop - kBottom;
    auto y_of = [&](double v) { return kTop + plot_h * (1.0 - (v - scale.lo) / (scale.hi - scale.lo)); };
    double slot = labels.empty() ? plot_w : plot_w / static_cast<double>(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        double x = kLeft + slot * static_cast<double>(i) + slot * 0.15;
        double y0 = y_of(0.0);
        double y1 = y_of(values[i]);
        out += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"{}\"/>\n", x,
                           std::min(y0, y1), slot * 0.7, std::abs(y0 - y1), kPalette[0]);
        out += fmt::format(
            "<text transform=\"translate({:.2f} {:.2f}) rotate(-45)\" text-anchor=\"end\">{}</text>\n",
            x + slot * 0.35, kHeight - kBottom + 14.0, xml(labels[i]));
    }
    out += "</svg>\n";
    return out;
}

std::string sha256_hex(std::string_view bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 failed");
    }
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += fmt::format("{:02x}", digest[i]);
    }
    return out;
}

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot read " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return sha256_hex(buf.str());
}

std::vector<ManifestEntry> scan_bundle(const std::string& root, const std::vector<std::string>& exclude) {
    std::vector<ManifestEntry> out;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) {
            continue;
        }
        auto rel = fs::relative(entry.path(), root).generic_string();
        if (std::find(exclude.begin(), exclude.end(), rel) != exclude.end()) {
            continue;
        }
        out.push_back({rel, static_cast<std::size_t>(entry.file_size()), sha256_file(entry.path().string())});
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
    return out;
}

nlohmann::json manifest_json(const std::vector<ManifestEntry>& entries, const nlohmann::json& config,
                             std::uint64_t seed) {
    nlohmann::json files = nlohmann::json::array();
    for (const auto& e : entries) {
        files.push_back({{"path", e.path}, {"bytes", e.bytes}, {"sha256", e.sha256}});
    }
    return {{"format", "newsmon-manifest 1"}, {"seed", seed}, {"config", config}, {"files", files}};
}

} // namespace newsmon
