#pragma once

#include <json.hpp>

#include <string>
#include <utility>
#include <vector>

namespace fluxem {

// FNV-1a 64 over the canonical (sorted-key) JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

// Deterministic shortest-round-trip decimal rendering.
std::string format_double(double v);

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows; // NaN marks a hole
};

// "# key=value" comment block, then the column row, then data rows.
std::string render_csv(const std::vector<std::pair<std::string, std::string>>& meta,
                       const Table& table);

// Write via a temp file + rename so readers never see partial content.
void atomic_write_text(const std::string& path, const std::string& text);

void write_csv(const std::string& path,
               const std::vector<std::pair<std::string, std::string>>& meta,
               const Table& table);

void write_json(const std::string& path, const nlohmann::json& j);

// Minimal static plots; both return the SVG text.
std::string svg_heatmap(size_t nx, size_t ny, const std::vector<double>& values,
                        const std::string& title);
std::string svg_polyline(const std::vector<double>& x, const std::vector<double>& y,
                         const std::string& title);

} // namespace fluxem
