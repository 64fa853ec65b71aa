#pragma once

// Autoregressive view: choosing the next token is a classification over the
// vocabulary, and a training point for target token c is any corpus
// subsequence of length p that ends at an occurrence of c.

#include "spectra/core_data.hpp"
#include "spectra/spectrum.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace spectra {

using TokenId = std::uint32_t;

class TokenCorpus {
public:
    /// Throws InvalidArgument on an empty document, TokenOutOfRange on an id >= vocab_size.
    TokenCorpus(std::vector<std::vector<TokenId>> docs, std::size_t vocab_size);

    std::size_t vocab_size() const noexcept { return vocab_size_; }
    std::size_t doc_count() const noexcept { return docs_.size(); }
    std::span<const TokenId> doc(std::size_t i) const { return docs_[i]; }

private:
    std::vector<std::vector<TokenId>> docs_;
    std::size_t vocab_size_;
};

/// One document per line, tokens as space-separated integers; blank lines are skipped.
TokenCorpus load_corpus(const std::filesystem::path& path, std::size_t vocab_size);
std::vector<TokenId> parse_token_line(std::string_view line);

/// Tokens [end - p + 1, end] of document `doc`.
struct TokenPoint {
    std::size_t doc;
    std::size_t end;
    std::size_t p;

    auto operator<=>(const TokenPoint&) const = default;
};

constexpr std::size_t kDefaultContextBuffer = 20;

/// Every (doc, e, p) with doc[e] == target and 2 <= p <= min(input_len + buffer, e + 1),
/// ordered by doc, then e, then p.
std::vector<TokenPoint> enumerate_token_points(const TokenCorpus& corpus, TokenId target,
                                               std::size_t input_len,
                                               std::size_t buffer = kDefaultContextBuffer);

/// Per-position score tf * ln((N + 1) / (df + 1)), where tf is the raw count of
/// the token in `generated` and df the number of corpus documents containing it.
std::vector<double> tfidf_scores(std::span<const TokenId> generated, const TokenCorpus& corpus);

/// Positions of the m highest scores, best first; equal scores keep position order.
std::vector<std::size_t> top_positions(std::span<const double> scores, std::size_t m);

struct TokenSpectrumOptions {
    std::optional<ClassId> relative;         // absent: general spectrum
    std::size_t max_relative_classes = 1000; // relative spectra refused above this T
    std::size_t input_len = 1;
    std::size_t buffer = kDefaultContextBuffer;
};

struct TokenSpectrum {
    std::vector<TokenPoint> points;  // enumerated training points; spectrum indices refer here
    std::optional<FeatureSet> features;  // rows aligned with points; absent when there are none
    Spectrum spectrum;
};

/// Enumerates the target's token points, looks up each one's embedding via
/// `alignment` (row r of `embeddings` belongs to alignment[r]), then runs the
/// support set, representer scores and staircase with c = target.
/// Throws MissingEmbedding, RelativeRefused, ClassOutOfRange.
TokenSpectrum token_spectrum(const TokenCorpus& corpus, const FeatureSet& embeddings,
                             std::span<const TokenPoint> alignment, const LinearHead& head,
                             std::span<const double> f_t, TokenId target,
                             const TokenSpectrumOptions& options = {});

/// JSON alignment manifest:
///   {"features": "<fvec path>", "target": <id>, "rows": [{"doc":..,"end":..,"p":..}, ...]}
struct TokenAlignment {
    std::filesystem::path features;
    std::optional<TokenId> target;
    std::vector<TokenPoint> rows;
};

TokenAlignment load_alignment(const std::filesystem::path& path);
void save_alignment(const TokenAlignment& alignment, const std::filesystem::path& path);

} // namespace spectra
