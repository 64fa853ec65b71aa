#pragma once

// Global-to-local spectrum of a test point.
//
// For a locality threshold delta, the spectrum point is
//
//   z_delta = argmax g(i)  over support points i with l(i, t) > delta
//
// Sweeping delta from +inf to -inf visits a Pareto staircase in (l, g):
// each entry owns the half-open interval [delta_lo, delta_hi) of thresholds
// for which it is the maximizer. Ties on g prefer the larger l, then the
// lower training index.

#include "spectra/attribution.hpp"
#include "spectra/core_data.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace spectra {

struct SpectrumEntry {
    std::size_t index;
    double g;
    double l;
    double delta_lo;  // -inf for the last entry
    double delta_hi;

    bool operator==(const SpectrumEntry&) const = default;
};

struct Spectrum {
    std::vector<SpectrumEntry> entries;  // decreasing l, increasing g
    std::optional<ResolvedQuery> query;
    SupportKind kind = SupportKind::General;

    bool empty() const noexcept { return entries.empty(); }
};

/// Staircase over the given points. The caller is responsible for having
/// restricted them to a support set.
Spectrum build_spectrum(std::span<const ScoredPoint> scored);

/// Restricts scored points to the support set, builds the staircase and
/// records the support set's query.
Spectrum build_spectrum(std::span<const ScoredPoint> scored, const SupportSet& support);

/// The entry whose interval contains delta; nullopt when delta >= max l.
std::optional<SpectrumEntry> spectrum_at(const Spectrum& s, double delta);

/// Reference scan: for each delta, argmax g over {l > delta} under the same
/// tie-break. Quadratic; intended for verification.
std::vector<std::optional<std::size_t>> spectrum_bruteforce(std::span<const ScoredPoint> scored,
                                                            std::span<const double> deltas);

struct SpectrumLength {
    std::size_t entries = 0;
    double l_span = 0.0;  // l of first entry minus l of last entry
};

SpectrumLength spectrum_length(const Spectrum& s);

/// JSON array of {index, g, l, delta_lo, delta_hi}; -inf is written as "-inf".
std::string spectrum_to_json(const Spectrum& s);

/// Inverse of spectrum_to_json (entries only). Throws InvalidArgument.
Spectrum spectrum_from_json(const std::string& text);

} // namespace spectra
