#pragma once

#include "spectra/core_data.hpp"
#include "spectra/spectrum.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace spectra {

struct PlotSpec {
    int width = 480;
    int height = 480;
    std::vector<std::string> palette = {"#d62728", "#2ca02c", "#1f77b4", "#ff7f0e",
                                        "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                                        "#bcbd22", "#17becf"};
    double support_opacity = 1.0;
    double other_opacity = 0.2;
    std::string path_stroke = "#000000";
    double point_radius = 3.5;
};

/// Standalone SVG scatter of a 2D training set: one circle per training point
/// (support members opaque, the rest translucent), the test point as a black
/// dot, and the spectrum entries joined by a polyline in staircase order.
/// Output bytes depend only on the inputs.
/// Throws NotTwoDimensional, InvalidArgument (bad PlotSpec), DimensionMismatch.
std::string render_2d_spectrum_svg(const FeatureSet& fs, const LabelVector& lv,
                                   const SupportSet& support, const Spectrum& spectrum,
                                   const PlotSpec& plot = {});

void render_2d_spectrum_svg(const FeatureSet& fs, const LabelVector& lv, const SupportSet& support,
                            const Spectrum& spectrum, const PlotSpec& plot,
                            const std::filesystem::path& path);

} // namespace spectra
