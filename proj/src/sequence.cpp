#include "spectra/sequence.hpp"

#include "spectra/attribution.hpp"
#include "spectra/errors.hpp"
#include "spectra/support.hpp"

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <unordered_set>

namespace spectra {

TokenCorpus::TokenCorpus(std::vector<std::vector<TokenId>> docs, std::size_t vocab_size)
    : docs_(std::move(docs)), vocab_size_(vocab_size)
{
    if (vocab_size_ == 0)
        throw Error(ErrorCode::InvalidArgument, "vocabulary size must be positive");
    for (std::size_t i = 0; i < docs_.size(); ++i) {
        if (docs_[i].empty())
            throw Error(ErrorCode::InvalidArgument, "document " + std::to_string(i) + " is empty", i);
        for (TokenId t : docs_[i])
            if (t >= vocab_size_)
                throw Error(ErrorCode::TokenOutOfRange,
                            "token " + std::to_string(t) + " in document " + std::to_string(i) +
                                " exceeds vocabulary size " + std::to_string(vocab_size_),
                            i);
    }
}

std::vector<TokenId> parse_token_line(std::string_view line)
{
    std::vector<TokenId> out;
    std::size_t pos = 0;
    while (pos < line.size()) {
        while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r'))
            ++pos;
        if (pos >= line.size())
            break;
        TokenId v = 0;
        const auto [ptr, ec] = std::from_chars(line.data() + pos, line.data() + line.size(), v);
        if (ec != std::errc() ||
            (ptr != line.data() + line.size() && *ptr != ' ' && *ptr != '\t' && *ptr != '\r'))
            throw Error(ErrorCode::InvalidArgument,
                        "malformed token id at column " + std::to_string(pos), pos);
        out.push_back(v);
        pos = static_cast<std::size_t>(ptr - line.data());
    }
    return out;
}

TokenCorpus load_corpus(const std::filesystem::path& path, std::size_t vocab_size)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot open corpus " + path.string());
    std::vector<std::vector<TokenId>> docs;
    std::string line;
    while (std::getline(in, line)) {
        auto tokens = parse_token_line(line);
        if (!tokens.empty())
            docs.push_back(std::move(tokens));
    }
    return TokenCorpus(std::move(docs), vocab_size);
}

std::vector<TokenPoint> enumerate_token_points(const TokenCorpus& corpus, TokenId target,
                                               std::size_t input_len, std::size_t buffer)
{
    if (target >= corpus.vocab_size())
        throw Error(ErrorCode::TokenOutOfRange,
                    "target token " + std::to_string(target) + " exceeds vocabulary size " +
                        std::to_string(corpus.vocab_size()));
    if (input_len == 0)
        throw Error(ErrorCode::InvalidArgument, "input length must be at least 1");

    const std::size_t max_p = input_len + buffer;
    std::vector<TokenPoint> out;
    for (std::size_t doc = 0; doc < corpus.doc_count(); ++doc) {
        const auto tokens = corpus.doc(doc);
        for (std::size_t e = 0; e < tokens.size(); ++e) {
            if (tokens[e] != target)
                continue;
            const std::size_t hi = std::min(max_p, e + 1);
            for (std::size_t p = 2; p <= hi; ++p)
                out.push_back({doc, e, p});
        }
    }
    return out;
}

std::vector<double> tfidf_scores(std::span<const TokenId> generated, const TokenCorpus& corpus)
{
    std::map<TokenId, std::size_t> tf;
    for (std::size_t i = 0; i < generated.size(); ++i) {
        if (generated[i] >= corpus.vocab_size())
            throw Error(ErrorCode::TokenOutOfRange,
                        "generated token " + std::to_string(generated[i]) + " at position " +
                            std::to_string(i) + " exceeds vocabulary size",
                        i);
        ++tf[generated[i]];
    }

    std::map<TokenId, std::size_t> df;
    for (const auto& [token, count] : tf)
        df[token] = 0;
    std::unordered_set<TokenId> seen;
    for (std::size_t doc = 0; doc < corpus.doc_count(); ++doc) {
        seen.clear();
        for (TokenId t : corpus.doc(doc))
            if (tf.count(t) != 0 && seen.insert(t).second)
                ++df[t];
    }

    const double n_docs = static_cast<double>(corpus.doc_count());
    std::vector<double> scores(generated.size());
    for (std::size_t i = 0; i < generated.size(); ++i) {
        const TokenId t = generated[i];
        scores[i] = static_cast<double>(tf[t]) *
                    std::log((n_docs + 1.0) / (static_cast<double>(df[t]) + 1.0));
    }
    return scores;
}

std::vector<std::size_t> top_positions(std::span<const double> scores, std::size_t m)
{
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    order.resize(std::min(m, order.size()));
    return order;
}

TokenSpectrum token_spectrum(const TokenCorpus& corpus, const FeatureSet& embeddings,
                             std::span<const TokenPoint> alignment, const LinearHead& head,
                             std::span<const double> f_t, TokenId target,
                             const TokenSpectrumOptions& options)
{
    if (target >= head.num_classes())
        throw Error(ErrorCode::ClassOutOfRange,
                    "target token " + std::to_string(target) + " has no row in a head with T=" +
                        std::to_string(head.num_classes()));
    if (options.relative && *options.relative != target &&
        head.num_classes() > options.max_relative_classes)
        throw Error(ErrorCode::RelativeRefused,
                    "relative spectra are refused for T=" + std::to_string(head.num_classes()) +
                        " (bound " + std::to_string(options.max_relative_classes) + ")");
    if (alignment.size() != embeddings.size())
        throw Error(ErrorCode::DimensionMismatch,
                    "alignment has " + std::to_string(alignment.size()) + " rows, embeddings have " +
                        std::to_string(embeddings.size()));
    if (embeddings.dim() != head.dim())
        throw Error(ErrorCode::DimensionMismatch, "embedding dimension does not match head");

    auto points = enumerate_token_points(corpus, target, options.input_len, options.buffer);

    std::map<TokenPoint, std::size_t> row_of;
    for (std::size_t r = 0; r < alignment.size(); ++r)
        row_of.emplace(alignment[r], r);

    const std::size_t d = embeddings.dim();
    std::vector<float> data;
    data.reserve(points.size() * d);
    for (const auto& tp : points) {
        const auto it = row_of.find(tp);
        if (it == row_of.end())
            throw Error(ErrorCode::MissingEmbedding,
                        "no embedding for token point (doc " + std::to_string(tp.doc) + ", end " +
                            std::to_string(tp.end) + ", p " + std::to_string(tp.p) + ")");
        const auto row = embeddings.row(it->second);
        data.insert(data.end(), row.begin(), row.end());
    }

    if (points.empty()) {
        Spectrum s;
        s.query = resolve(head, Query{{f_t.begin(), f_t.end()}, target, options.relative});
        s.kind = s.query->general() ? SupportKind::General : SupportKind::Relative;
        return TokenSpectrum{{}, std::nullopt, std::move(s)};
    }

    FeatureSet fs(points.size(), d, std::move(data));
    const LabelVector lv(head.num_classes(), std::vector<ClassId>(points.size(), target));
    const Query q{{f_t.begin(), f_t.end()}, target, options.relative};
    const auto support = support_set(fs, lv, head, q);
    const auto scored = representer_scores(fs, lv, head, q, false);
    auto spectrum = build_spectrum(scored, support);
    return TokenSpectrum{std::move(points), std::move(fs), std::move(spectrum)};
}

TokenAlignment load_alignment(const std::filesystem::path& path)
{
    const auto bytes = read_file_bytes(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::InvalidArgument, "alignment manifest: " + std::string(e.what()),
                    e.byte);
    }
    if (!j.is_object() || !j.contains("rows") || !j["rows"].is_array() || !j.contains("features") ||
        !j["features"].is_string())
        throw Error(ErrorCode::InvalidArgument,
                    "alignment manifest needs a 'features' path and a 'rows' array");

    TokenAlignment a;
    a.features = j["features"].get<std::string>();
    if (a.features.is_relative())
        a.features = path.parent_path() / a.features;
    if (j.contains("target") && j["target"].is_number_unsigned())
        a.target = j["target"].get<TokenId>();
    const auto& rows = j["rows"];
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (!row.is_object() || !row.contains("doc") || !row.contains("end") || !row.contains("p") ||
            !row["doc"].is_number_unsigned() || !row["end"].is_number_unsigned() ||
            !row["p"].is_number_unsigned())
            throw Error(ErrorCode::InvalidArgument,
                        "alignment row " + std::to_string(r) + " needs unsigned doc/end/p", r);
        a.rows.push_back({row["doc"].get<std::size_t>(), row["end"].get<std::size_t>(),
                          row["p"].get<std::size_t>()});
    }
    return a;
}

void save_alignment(const TokenAlignment& alignment, const std::filesystem::path& path)
{
    nlohmann::json j;
    j["features"] = alignment.features.generic_string();
    if (alignment.target)
        j["target"] = *alignment.target;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : alignment.rows)
        rows.push_back({{"doc", r.doc}, {"end", r.end}, {"p", r.p}});
    j["rows"] = std::move(rows);
    const auto text = j.dump(2) + "\n";
    write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

} // namespace spectra
