#include "hjlab/runio.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hjlab/errors.hpp"

namespace hjlab {

uint64_t digest64(const void* data, size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    uint64_t h = 0xcbf29ce484222325ULL;
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string digest64_hex_of_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ConfigError("digest: cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string body = ss.str();
    uint64_t h = digest64(body.data(), body.size());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + p.string());
    out << text;
}

std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_csv(const std::filesystem::path& p, const std::vector<CsvColumn>& cols) {
    if (cols.empty()) throw ConfigError("write_csv: no columns");
    size_t rows = cols.front().values.size();
    for (const auto& c : cols)
        if (c.values.size() != rows) throw ConfigError("write_csv: ragged columns");
    std::ostringstream out;
    out.precision(17);
    for (size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c].name;
    out << "\n";
    for (size_t r = 0; r < rows; ++r) {
        for (size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c].values[r];
        out << "\n";
    }
    write_text(p, out.str());
}

namespace {
double axis_map(double v, double lo, double hi, double px0, double px1, bool log_scale) {
    if (log_scale) {
        v = std::log10(v);
        lo = std::log10(lo);
        hi = std::log10(hi);
    }
    double t = (v - lo) / (hi - lo);
    return px0 + t * (px1 - px0);
}
}  // namespace

void write_svg_plot(const std::filesystem::path& p, const std::string& title,
                    const std::vector<SvgSeries>& series, bool log_x, bool log_y) {
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series)
        for (size_t i = 0; i < s.x.size(); ++i) {
            if (log_x && s.x[i] <= 0) continue;
            if (log_y && s.y[i] <= 0) continue;
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    if (!(xmin < xmax)) {
        xmin -= 1.0;
        xmax += 1.0;
    }
    if (!(ymin < ymax)) {
        ymin -= 1.0;
        ymax += 1.0;
    }
    const double W = 640, H = 480, L = 70, R = 20, T = 40, B = 50;
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

    std::ostringstream out;
    out.precision(12);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    out << "<!-- data table\n";
    for (const auto& s : series) {
        out << "# " << s.label << "\n";
        for (size_t i = 0; i < s.x.size(); ++i) out << s.x[i] << "\t" << s.y[i] << "\n";
    }
    out << "-->\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
        << title << "</text>\n";
    out << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << (W - L - R) << "\" height=\""
        << (H - T - B) << "\" fill=\"none\" stroke=\"#444\"/>\n";
    // Axis range labels.
    out << "<text x=\"" << L << "\" y=\"" << H - B + 18 << "\" font-size=\"11\">" << xmin
        << "</text>\n";
    out << "<text x=\"" << W - R << "\" y=\"" << H - B + 18
        << "\" text-anchor=\"end\" font-size=\"11\">" << xmax << "</text>\n";
    out << "<text x=\"" << L - 6 << "\" y=\"" << H - B << "\" text-anchor=\"end\" font-size=\"11\">"
        << ymin << "</text>\n";
    out << "<text x=\"" << L - 6 << "\" y=\"" << T + 12
        << "\" text-anchor=\"end\" font-size=\"11\">" << ymax << "</text>\n";

    int ci = 0;
    double legend_y = T + 14;
    for (const auto& s : series) {
        const char* col = colors[ci % 5];
        std::ostringstream pts;
        for (size_t i = 0; i < s.x.size(); ++i) {
            if (log_x && s.x[i] <= 0) continue;
            if (log_y && s.y[i] <= 0) continue;
            double px = axis_map(s.x[i], xmin, xmax, L, W - R, log_x);
            double py = axis_map(s.y[i], ymin, ymax, H - B, T, log_y);
            if (s.line) {
                pts << px << "," << py << " ";
            } else {
                out << "<circle cx=\"" << px << "\" cy=\"" << py << "\" r=\"3\" fill=\"" << col
                    << "\"/>\n";
            }
        }
        if (s.line)
            out << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\"" << col
                << "\" stroke-width=\"1.5\"/>\n";
        out << "<text x=\"" << W - R - 8 << "\" y=\"" << legend_y
            << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << col << "\">" << s.label
            << "</text>\n";
        legend_y += 16;
        ++ci;
    }
    out << "</svg>\n";
    write_text(p, out.str());
}

RunManifest::RunManifest(std::string command, nlohmann::json config, uint64_t master_seed)
    : config_(std::move(config)) {
    root_["command"] = std::move(command);
    root_["master_seed"] = master_seed;
    root_["version"] = kVersion;
    auto now = std::chrono::system_clock::now().time_since_epoch();
    root_["start_unix_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(now).count();
}

void RunManifest::add_output(const std::filesystem::path& p) {
    nlohmann::json o;
    o["path"] = p.filename().string();
    o["bytes"] = static_cast<uint64_t>(std::filesystem::file_size(p));
    o["digest64"] = digest64_hex_of_file(p);
    outputs_.push_back(std::move(o));
}

void RunManifest::finish_and_write(const std::filesystem::path& run_dir) {
    auto now = std::chrono::system_clock::now().time_since_epoch();
    root_["end_unix_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(now).count();
    root_["config"] = config_;
    root_["outputs"] = outputs_;
    write_text(run_dir / "manifest.json", root_.dump(2) + "\n");
}

}  // namespace hjlab
