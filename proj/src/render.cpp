#include "spectra/render.hpp"

#include "spectra/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>

namespace spectra {

namespace {

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    // Normalize "-0.00".
    if (std::string_view(buf) == "-0.00")
        return "0.00";
    return buf;
}

std::string fmt_opacity(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

struct Frame {
    double min_x, min_y, scale, off_x, off_y;
    int height;

    double x(double v) const { return off_x + (v - min_x) * scale; }
    double y(double v) const { return height - (off_y + (v - min_y) * scale); }
};

Frame fit(const FeatureSet& fs, std::span<const double> test, int width, int height)
{
    double lo_x = test[0], hi_x = test[0], lo_y = test[1], hi_y = test[1];
    for (std::size_t i = 0; i < fs.size(); ++i) {
        const auto r = fs.row(i);
        lo_x = std::min(lo_x, static_cast<double>(r[0]));
        hi_x = std::max(hi_x, static_cast<double>(r[0]));
        lo_y = std::min(lo_y, static_cast<double>(r[1]));
        hi_y = std::max(hi_y, static_cast<double>(r[1]));
    }
    const double span_x = std::max(hi_x - lo_x, 1e-9);
    const double span_y = std::max(hi_y - lo_y, 1e-9);
    const double margin = 0.05;
    const double usable_w = width * (1.0 - 2 * margin);
    const double usable_h = height * (1.0 - 2 * margin);
    const double scale = std::min(usable_w / span_x, usable_h / span_y);
    // Center the data in the canvas.
    const double off_x = (width - span_x * scale) / 2.0;
    const double off_y = (height - span_y * scale) / 2.0;
    return Frame{lo_x, lo_y, scale, off_x, off_y, height};
}

} // namespace

std::string render_2d_spectrum_svg(const FeatureSet& fs, const LabelVector& lv,
                                   const SupportSet& support, const Spectrum& spectrum,
                                   const PlotSpec& plot)
{
    if (fs.dim() != 2)
        throw Error(ErrorCode::NotTwoDimensional,
                    "plotting needs 2D features, got d=" + std::to_string(fs.dim()));
    check_consistent(fs, lv);
    if (support.query.features.size() != 2)
        throw Error(ErrorCode::NotTwoDimensional, "test point is not two-dimensional");
    if (plot.width <= 0 || plot.height <= 0)
        throw Error(ErrorCode::InvalidArgument, "plot dimensions must be positive");
    if (plot.palette.size() < lv.num_classes())
        throw Error(ErrorCode::InvalidArgument,
                    "palette has " + std::to_string(plot.palette.size()) + " colors for " +
                        std::to_string(lv.num_classes()) + " classes");
    for (const auto& e : spectrum.entries)
        if (e.index >= fs.size())
            throw Error(ErrorCode::DimensionMismatch,
                        "spectrum index " + std::to_string(e.index) + " out of range", e.index);

    const auto frame = fit(fs, support.query.features, plot.width, plot.height);
    const std::string w = std::to_string(plot.width);
    const std::string h = std::to_string(plot.height);
    const std::string radius = fmt(plot.point_radius);

    std::string out;
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + w + "\" height=\"" + h +
           "\" viewBox=\"0 0 " + w + " " + h + "\">\n";
    out += "<rect x=\"0\" y=\"0\" width=\"" + w + "\" height=\"" + h + "\" fill=\"#ffffff\"/>\n";

    out += "<g id=\"training\">\n";
    for (std::size_t i = 0; i < fs.size(); ++i) {
        const auto r = fs.row(i);
        const bool member =
            std::binary_search(support.indices.begin(), support.indices.end(), i);
        out += "<circle class=\"" + std::string(member ? "support" : "other") +
               "\" data-index=\"" + std::to_string(i) + "\" data-class=\"" +
               std::to_string(lv[i]) + "\" cx=\"" + fmt(frame.x(r[0])) + "\" cy=\"" +
               fmt(frame.y(r[1])) + "\" r=\"" + radius + "\" fill=\"" + plot.palette[lv[i]] +
               "\" fill-opacity=\"" +
               fmt_opacity(member ? plot.support_opacity : plot.other_opacity) + "\"";
        if (member)
            out += " stroke=\"#000000\" stroke-width=\"0.75\"";
        out += "/>\n";
    }
    out += "</g>\n";

    out += "<polyline id=\"spectrum\" data-indices=\"";
    for (std::size_t e = 0; e < spectrum.entries.size(); ++e) {
        if (e)
            out += ' ';
        out += std::to_string(spectrum.entries[e].index);
    }
    out += "\" points=\"";
    for (std::size_t e = 0; e < spectrum.entries.size(); ++e) {
        const auto r = fs.row(spectrum.entries[e].index);
        if (e)
            out += ' ';
        out += fmt(frame.x(r[0])) + "," + fmt(frame.y(r[1]));
    }
    out += "\" fill=\"none\" stroke=\"" + plot.path_stroke + "\" stroke-width=\"1.5\"/>\n";

    const auto& t = support.query.features;
    out += "<circle id=\"test-point\" class=\"test\" cx=\"" + fmt(frame.x(t[0])) + "\" cy=\"" +
           fmt(frame.y(t[1])) + "\" r=\"" + fmt(plot.point_radius * 1.6) +
           "\" fill=\"#000000\"/>\n";
    out += "</svg>\n";
    return out;
}

void render_2d_spectrum_svg(const FeatureSet& fs, const LabelVector& lv, const SupportSet& support,
                            const Spectrum& spectrum, const PlotSpec& plot,
                            const std::filesystem::path& path)
{
    const auto svg = render_2d_spectrum_svg(fs, lv, support, spectrum, plot);
    write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(svg.data()), svg.size()));
}

} // namespace spectra
