#include "fluxem/io.hpp"

#include "fluxem/device.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace fluxem {

std::string config_hash(const nlohmann::json& config) {
    const std::string canon = config.dump(); // object keys are stored sorted
    uint64_t h = 14695981039346656037ull;
    for (unsigned char c : canon) {
        h ^= uint64_t(c);
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    // shortest form that round-trips
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        double back = 0.0;
        std::sscanf(buf, "%lf", &back);
        if (back == v) return buf;
    }
    return buf;
}

std::string render_csv(const std::vector<std::pair<std::string, std::string>>& meta,
                       const Table& table) {
    std::ostringstream out;
    for (const auto& [k, v] : meta) out << "# " << k << "=" << v << "\n";
    for (size_t c = 0; c < table.columns.size(); ++c)
        out << (c ? "," : "") << table.columns[c];
    out << "\n";
    for (const auto& row : table.rows) {
        if (row.size() != table.columns.size())
            throw config_error("csv row width does not match the column header");
        for (size_t c = 0; c < row.size(); ++c)
            out << (c ? "," : "") << format_double(row[c]);
        out << "\n";
    }
    return out.str();
}

void atomic_write_text(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw config_error("cannot open " + tmp + " for writing");
        f << text;
        if (!f.flush()) throw config_error("write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw config_error("cannot rename " + tmp + " to " + path);
}

void write_csv(const std::string& path,
               const std::vector<std::pair<std::string, std::string>>& meta,
               const Table& table) {
    atomic_write_text(path, render_csv(meta, table));
}

void write_json(const std::string& path, const nlohmann::json& j) {
    atomic_write_text(path, j.dump(2) + "\n");
}

namespace {

// five-stop dark-to-light ramp
void ramp_color(double t, int& r, int& g, int& b) {
    static const int stops[5][3] = {
        {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
    t = std::clamp(t, 0.0, 1.0) * 4.0;
    const int i = std::min(int(t), 3);
    const double f = t - i;
    r = int(stops[i][0] + f * (stops[i + 1][0] - stops[i][0]));
    g = int(stops[i][1] + f * (stops[i + 1][1] - stops[i][1]));
    b = int(stops[i][2] + f * (stops[i + 1][2] - stops[i][2]));
}

} // namespace

std::string svg_heatmap(size_t nx, size_t ny, const std::vector<double>& values,
                        const std::string& title) {
    if (values.size() != nx * ny || nx == 0 || ny == 0)
        throw config_error("heatmap dimensions do not match the value count");
    double lo = INFINITY, hi = -INFINITY;
    for (double v : values) {
        if (std::isnan(v)) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!(hi > lo)) { lo -= 0.5; hi += 0.5; }
    const double w = 720.0, h = 520.0, mx = 20.0, my = 40.0;
    const double cw = (w - 2 * mx) / double(nx);
    const double ch = (h - my - 20.0) / double(ny);
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\">\n<text x=\"" << mx << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">"
      << title << "</text>\n";
    for (size_t j = 0; j < ny; ++j) {
        for (size_t i = 0; i < nx; ++i) {
            const double v = values[j * nx + i];
            int r = 128, g = 128, b = 128;
            if (!std::isnan(v)) ramp_color((v - lo) / (hi - lo), r, g, b);
            s << "<rect x=\"" << mx + i * cw << "\" y=\"" << my + (ny - 1 - j) * ch
              << "\" width=\"" << cw + 0.5 << "\" height=\"" << ch + 0.5
              << "\" fill=\"rgb(" << r << "," << g << "," << b << ")\"/>\n";
        }
    }
    s << "</svg>\n";
    return s.str();
}

std::string svg_polyline(const std::vector<double>& x, const std::vector<double>& y,
                         const std::string& title) {
    if (x.size() != y.size() || x.empty())
        throw config_error("polyline needs matching nonempty x and y");
    double xlo = INFINITY, xhi = -INFINITY, ylo = INFINITY, yhi = -INFINITY;
    for (size_t i = 0; i < x.size(); ++i) {
        if (std::isnan(x[i]) || std::isnan(y[i])) continue;
        xlo = std::min(xlo, x[i]); xhi = std::max(xhi, x[i]);
        ylo = std::min(ylo, y[i]); yhi = std::max(yhi, y[i]);
    }
    if (!(xhi > xlo)) { xlo -= 0.5; xhi += 0.5; }
    if (!(yhi > ylo)) { ylo -= 0.5; yhi += 0.5; }
    const double w = 720.0, h = 480.0, ml = 60.0, mr = 20.0, mt = 40.0, mb = 40.0;
    auto px = [&](double v) { return ml + (v - xlo) / (xhi - xlo) * (w - ml - mr); };
    auto py = [&](double v) { return h - mb - (v - ylo) / (yhi - ylo) * (h - mt - mb); };
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\">\n<text x=\"" << ml << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">"
      << title << "</text>\n"
      << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << w - ml - mr
      << "\" height=\"" << h - mt - mb << "\" fill=\"none\" stroke=\"black\"/>\n";
    s << "<text x=\"" << ml << "\" y=\"" << h - 12 << "\" font-family=\"sans-serif\" font-size=\"12\">"
      << format_double(xlo) << "</text>\n"
      << "<text x=\"" << w - mr - 80 << "\" y=\"" << h - 12
      << "\" font-family=\"sans-serif\" font-size=\"12\">" << format_double(xhi) << "</text>\n"
      << "<text x=\"4\" y=\"" << h - mb << "\" font-family=\"sans-serif\" font-size=\"12\">"
      << format_double(ylo) << "</text>\n"
      << "<text x=\"4\" y=\"" << mt + 12 << "\" font-family=\"sans-serif\" font-size=\"12\">"
      << format_double(yhi) << "</text>\n";
    bool open = false;
    std::ostringstream pts;
    for (size_t i = 0; i < x.size(); ++i) {
        if (std::isnan(x[i]) || std::isnan(y[i])) {
            if (open) { s << "<polyline points=\"" << pts.str()
                          << "\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>\n"; }
            pts.str("");
            open = false;
            continue;
        }
        pts << px(x[i]) << "," << py(y[i]) << " ";
        open = true;
    }
    if (open)
        s << "<polyline points=\"" << pts.str()
          << "\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>\n";
    s << "</svg>\n";
    return s.str();
}

} // namespace fluxem
