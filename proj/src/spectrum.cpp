#include "spectra/spectrum.hpp"

#include "spectra/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace spectra {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// true when a is preferred over b as the maximizer.
bool better(const ScoredPoint& a, const ScoredPoint& b)
{
    if (a.g != b.g)
        return a.g > b.g;
    if (a.l != b.l)
        return a.l > b.l;
    return a.index < b.index;
}

} // namespace

Spectrum build_spectrum(std::span<const ScoredPoint> scored)
{
    std::vector<ScoredPoint> order(scored.begin(), scored.end());
    std::sort(order.begin(), order.end(), [](const ScoredPoint& a, const ScoredPoint& b) {
        if (a.l != b.l)
            return a.l > b.l;
        if (a.g != b.g)
            return a.g > b.g;
        return a.index < b.index;
    });

    Spectrum s;
    for (const auto& p : order) {
        if (!s.entries.empty() && !(p.g > s.entries.back().g))
            continue;
        if (!s.entries.empty())
            s.entries.back().delta_lo = p.l;
        s.entries.push_back({p.index, p.g, p.l, kNegInf, p.l});
    }
    return s;
}

Spectrum build_spectrum(std::span<const ScoredPoint> scored, const SupportSet& support)
{
    auto s = build_spectrum(restrict_to_support(scored, support));
    s.query = support.query;
    s.kind = support.kind;
    return s;
}

std::optional<SpectrumEntry> spectrum_at(const Spectrum& s, double delta)
{
    // delta_hi is strictly decreasing along entries.
    const auto it = std::partition_point(s.entries.begin(), s.entries.end(),
                                         [delta](const SpectrumEntry& e) { return e.delta_lo > delta; });
    if (it == s.entries.end() || !(delta < it->delta_hi))
        return std::nullopt;
    return *it;
}

std::vector<std::optional<std::size_t>> spectrum_bruteforce(std::span<const ScoredPoint> scored,
                                                            std::span<const double> deltas)
{
    std::vector<std::optional<std::size_t>> out;
    out.reserve(deltas.size());
    for (double delta : deltas) {
        const ScoredPoint* best = nullptr;
        for (const auto& p : scored)
            if (p.l > delta && (best == nullptr || better(p, *best)))
                best = &p;
        out.push_back(best ? std::optional(best->index) : std::nullopt);
    }
    return out;
}

SpectrumLength spectrum_length(const Spectrum& s)
{
    if (s.entries.empty())
        return {};
    return {s.entries.size(), s.entries.front().l - s.entries.back().l};
}

std::string spectrum_to_json(const Spectrum& s)
{
    auto encode = [](double v) -> nlohmann::json {
        if (std::isinf(v) && v < 0)
            return "-inf";
        return v;
    };
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : s.entries)
        arr.push_back({{"index", e.index},
                       {"g", e.g},
                       {"l", e.l},
                       {"delta_lo", encode(e.delta_lo)},
                       {"delta_hi", encode(e.delta_hi)}});
    return arr.dump();
}

Spectrum spectrum_from_json(const std::string& text)
{
    nlohmann::json arr;
    try {
        arr = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("spectrum JSON: ") + e.what(), e.byte);
    }
    if (!arr.is_array())
        throw Error(ErrorCode::InvalidArgument, "spectrum JSON must be an array");

    auto decode = [](const nlohmann::json& v, std::size_t i) -> double {
        if (v.is_string() && v.get<std::string>() == "-inf")
            return kNegInf;
        if (v.is_number())
            return v.get<double>();
        throw Error(ErrorCode::InvalidArgument,
                    "spectrum entry " + std::to_string(i) + " has a malformed number", i);
    };

    Spectrum s;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const auto& e = arr[i];
        if (!e.is_object() || !e.contains("index") || !e["index"].is_number_unsigned())
            throw Error(ErrorCode::InvalidArgument,
                        "spectrum entry " + std::to_string(i) + " lacks an index", i);
        for (const char* key : {"g", "l", "delta_lo", "delta_hi"})
            if (!e.contains(key))
                throw Error(ErrorCode::InvalidArgument,
                            "spectrum entry " + std::to_string(i) + " lacks " + key, i);
        s.entries.push_back({e["index"].get<std::size_t>(), decode(e["g"], i), decode(e["l"], i),
                             decode(e["delta_lo"], i), decode(e["delta_hi"], i)});
    }
    return s;
}

} // namespace spectra
