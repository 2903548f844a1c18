// SPDX-License-Identifier: Apache-2.0
//
// Self-contained SVG charts for experiment reports.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace mapp::plots {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct Axes {
  std::string title;
  std::string x_label;
  std::string y_label;
};

std::string line_chart(const Axes& axes, const std::vector<Series>& series, int width = 640,
                       int height = 400);

/// Several line charts laid out on a grid in one document.
std::string panel_grid(const std::vector<std::pair<Axes, std::vector<Series>>>& panels, int columns,
                       int panel_width = 420, int panel_height = 300);

/// Radar chart; every axis is scaled by its maximum over the rows.
std::string radar_chart(const std::string& title, const std::vector<std::string>& axes,
                        const std::vector<std::pair<std::string, std::vector<double>>>& rows,
                        int size = 520);

/// Writes `text` to `path`; returns false (and leaves no partial file) on
/// failure.
bool write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace mapp::plots
