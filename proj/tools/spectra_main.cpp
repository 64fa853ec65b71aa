// spectra: command-line front end for support sets and global-to-local spectra.
//
// Every subcommand reads and writes the FVEC / LBL / HEAD binary formats.
// Results go to stdout (or --out), diagnostics to stderr. Failures print a
// single "ErrorCode: message" line and exit with
//   2 bad input format, 3 dimension/class mismatch, 4 numerical failure, 5 I/O.

#include "spectra/attribution.hpp"
#include "spectra/core_data.hpp"
#include "spectra/errors.hpp"
#include "spectra/head.hpp"
#include "spectra/render.hpp"
#include "spectra/sequence.hpp"
#include "spectra/spectrum.hpp"
#include "spectra/support.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using namespace spectra;

std::vector<double> parse_vector(const std::string& text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidArgument, "cannot parse number '" + item + "'");
        }
        if (item.find_first_not_of(" \t", used) != std::string::npos)
            throw Error(ErrorCode::InvalidArgument, "cannot parse number '" + item + "'");
        out.push_back(v);
    }
    if (out.empty())
        throw Error(ErrorCode::InvalidArgument, "empty vector '" + text + "'");
    return out;
}

std::vector<std::array<double, 2>> parse_centers(const std::string& text)
{
    std::vector<std::array<double, 2>> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ';')) {
        const auto v = parse_vector(item);
        if (v.size() != 2)
            throw Error(ErrorCode::InvalidArgument, "center '" + item + "' is not an x,y pair");
        out.push_back({v[0], v[1]});
    }
    return out;
}

/// Default seed, overridable through SPECTRA_SEED.
std::uint64_t default_seed(std::uint64_t fallback)
{
    if (const char* env = std::getenv("SPECTRA_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidArgument, std::string("SPECTRA_SEED is not an integer: ") + env);
        }
    }
    return fallback;
}

class Output {
public:
    explicit Output(const std::string& path)
    {
        if (!path.empty()) {
            file_.open(path, std::ios::trunc);
            if (!file_)
                throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
        }
    }

    std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

    void finish()
    {
        stream().flush();
        if (!stream())
            throw Error(ErrorCode::IoError, "write failed");
    }

private:
    std::ofstream file_;
};

/// Input flags shared by the data-consuming subcommands.
struct DataArgs {
    std::string manifest;
    std::string features;
    std::string labels;
    std::string head;

    void add(CLI::App* app, bool with_head)
    {
        app->add_option("--manifest", manifest, "JSON manifest naming features/labels/head");
        app->add_option("--features", features, "FVEC training features");
        app->add_option("--labels", labels, "LBL training labels");
        if (with_head)
            app->add_option("--head", head, "HEAD linear head");
    }

    fs::path pick(const std::string& flag, const std::optional<fs::path> DatasetManifest::*field,
                  const char* what) const
    {
        if (!flag.empty())
            return flag;
        if (!manifest.empty()) {
            const auto m = load_manifest(manifest);
            if (m.*field)
                return *(m.*field);
        }
        throw Error(ErrorCode::InvalidArgument, std::string("no ") + what +
                                                    " file given (use --" + what +
                                                    " or --manifest)");
    }

    FeatureSet load_features() const
    {
        return load_feature_set(pick(features, &DatasetManifest::features, "features"));
    }
    LabelVector load_labels() const
    {
        return load_label_vector(pick(labels, &DatasetManifest::labels, "labels"));
    }
    LinearHead load_head() const
    {
        return load_linear_head(pick(head, &DatasetManifest::head, "head"));
    }
};

/// Test points from repeated --point flags or an FVEC file.
struct QueryArgs {
    std::vector<std::string> points;
    std::string queries;
    std::optional<ClassId> predicted;
    std::optional<ClassId> relative;

    void add(CLI::App* app, bool with_classes)
    {
        app->add_option("--point", points, "test feature vector as comma-separated values");
        app->add_option("--queries", queries, "FVEC file of test feature vectors");
        if (with_classes) {
            app->add_option("--class", predicted, "override the predicted class c");
            app->add_option("--relative", relative, "relative class k (default: general, k = c)");
        }
    }

    std::vector<std::vector<double>> load() const
    {
        std::vector<std::vector<double>> out;
        for (const auto& p : points)
            out.push_back(parse_vector(p));
        if (!queries.empty()) {
            const auto q = load_feature_set(queries);
            for (std::size_t i = 0; i < q.size(); ++i)
                out.push_back(widen(q.row(i)));
        }
        if (out.empty())
            throw Error(ErrorCode::InvalidArgument, "no test points (use --point or --queries)");
        return out;
    }

    Query query(std::vector<double> f) const { return Query{std::move(f), predicted, relative}; }
};

const char* kind_name(SupportKind k)
{
    return k == SupportKind::General ? "general" : "relative";
}

// --- subcommands ---

struct GenBlobs {
    std::optional<std::uint64_t> seed;
    std::size_t n_per_class = 100;
    double stddev = 1.0;
    std::string centers = "0,0;4,0;2,3.5";
    std::string out_dir;
    std::string features;
    std::string labels;
    std::string name = "blobs";

    void add(CLI::App& root)
    {
        auto* app = root.add_subcommand("gen-blobs", "generate a 2D Gaussian-blob dataset");
        app->add_option("--seed", seed, "RNG seed (default 7, or SPECTRA_SEED)");
        app->add_option("--n-per-class", n_per_class, "points per class")->check(CLI::PositiveNumber);
        app->add_option("--stddev", stddev, "noise standard deviation");
        app->add_option("--centers", centers, "class centers as x,y;x,y;...");
        app->add_option("--out-dir", out_dir, "write features.fvec, labels.lbl and manifest.json here");
        app->add_option("--features", features, "FVEC output path");
        app->add_option("--labels", labels, "LBL output path");
        app->add_option("--name", name, "dataset name recorded in the manifest");
        app->callback([this] { run(); });
    }

    void run()
    {
        const auto c = parse_centers(centers);
        const auto blobs = make_blobs(seed.value_or(default_seed(7)), n_per_class, c, stddev);
        fs::path f = features, l = labels;
        if (!out_dir.empty()) {
            fs::create_directories(out_dir);
            if (f.empty())
                f = fs::path(out_dir) / "features.fvec";
            if (l.empty())
                l = fs::path(out_dir) / "labels.lbl";
        }
        if (f.empty() || l.empty())
            throw Error(ErrorCode::InvalidArgument, "need --out-dir or both --features and --labels");
        save_feature_set(blobs.features, f);
        save_label_vector(blobs.labels, l);
        if (!out_dir.empty())
            save_manifest(DatasetManifest{fs::path("features.fvec"), fs::path("labels.lbl"),
                                          std::nullopt, name},
                          fs::path(out_dir) / "manifest.json");
        std::cerr << "wrote " << blobs.features.size() << " points in "
                  << blobs.labels.num_classes() << " classes\n";
    }
};

struct Train {
    DataArgs data;
    double lambda = 0.01;
    std::optional<double> lr;
    std::size_t max_iters = 200000;
    double grad_tol = 1e-8;
    std::optional<std::uint64_t> seed;
    std::string out;

    void add(CLI::App& root)
    {
        auto* app = root.add_subcommand("train", "train an L2-regularized softmax head");
        data.add(app, false);
        app->add_option("--lambda", lambda, "L2 regularization strength (> 0)");
        app->add_option("--lr", lr, "fixed step size (default: 1/L from the data)");
        app->add_option("--max-iters", max_iters, "iteration budget");
        app->add_option("--grad-tol", grad_tol, "stop when the gradient inf-norm falls below this");
        app->add_option("--seed", seed, "initialization seed (default 0, or SPECTRA_SEED)");
        app->add_option("--out", out, "HEAD output path")->required();
        app->callback([this] { run(); });
    }

    void run()
    {
        const auto f = data.load_features();
        const auto l = data.load_labels();
        TrainConfig cfg;
        cfg.lambda = lambda;
        cfg.learning_rate = lr.value_or(safe_learning_rate(f, lambda));
        cfg.max_iters = max_iters;
        cfg.grad_tol = grad_tol;
        cfg.seed = seed.value_or(default_seed(0));
        const auto head = train_head(f, l, cfg);
        save_linear_head(head, out);
        std::size_t correct = 0;
        for (std::size_t i = 0; i < f.size(); ++i)
            correct += predict(head, widen(f.row(i))).label == l[i];
        std::cerr << "trained head: T=" << head.num_classes() << " d=" << head.dim()
                  << " training accuracy " << static_cast<double>(correct) / f.size() << "\n";
    }
};

struct Predict {
    std::string head;
    std::string manifest;
    QueryArgs queries;
    std::string out;

    void add(CLI::App& root)
    {
        auto* app = root.add_subcommand("predict", "class and probabilities for test points");
        app->add_option("--head", head, "HEAD file");
        app->add_option("--manifest", manifest, "manifest naming the head");
        queries.add(app, false);
        app->add_option("--out", out, "output file (default stdout)");
        app->callback([this] { run(); });
    }

    void run()
    {
        DataArgs d{manifest, "", "", head};
        const auto h = d.load_head();
        Output o(out);
        for (const auto& f : queries.load()) {
            const auto p = predict(h, f);
            o.stream() << json{{"class", p.label}, {"probs", p.probs}}.dump() << "\n";
        }
        o.finish();
    }
};

struct Support {
    DataArgs data;
    QueryArgs queries;
    std::string out;

    void add(CLI::App& root)
    {
        auto* app = root.add_subcommand("support", "general or relative support sets");
        data.add(app, true);
        queries.add(app, true);
        app->add_option("--out", out, "output file (default stdout)");
        app->callback([this] { run(); });
    }

    void run()
    {
        const auto f = data.load_features();
        const auto l = data.load_labels();
        const auto h = data.load_head();
        Output o(out);
        for (auto& p : queries.load()) {
            const auto s = support_set(f, l, h, queries.query(std::move(p)));
            o.stream() << json{{"c", s.query.predicted},
                               {"k", s.query.relative},
                               {"kind", kind_name(s.kind)},
                               {"indices", s.indices}}
                              .dump()
                       << "\n";
        }
        o.finish();
    }
};

struct SpectrumCmd {
    DataArgs data;
    QueryArgs queries;
    std::string measure = "representer";
    bool relative_g = false;
    std::optional<double> lambda;
    InfluenceConfig influence;
    bool no_global = false;
    std::string out;

    void add(CLI::App& root)
    {
        auto* app = root.add_subcommand("spectrum", "global-to-local spectra (one JSON array per test point)");
        data.add(app, true);
        queries.add(app, true);
        app->add_option("--measure", measure, "representer | influence")
            ->check(CLI::IsMember({"representer", "influence"}));
        app->add_flag("--relative-g", relative_g, "use W_c - W_k, b_c - b_k in the representer g");
        app->add_option("--lambda", lambda, "influence: regularization (default: head lambda)");
        app->add_option("--damping", influence.damping, "influence: Hessian damping");
        app->add_option("--cg-tol", influence.cg_tol, "influence: CG relative residual tolerance");
        app->add_option("--cg-max-iters", influence.cg_max_iters, "influence: CG iteration budget");
        app->add_option("--dense-threshold", influence.explicit_solve_threshold,
                        "influence: dense solve below this parameter count");
        app->add_flag("--no-global", no_global, "influence: skip g (reported as 0)");
        app->add_option("--out", out, "output file (default stdout)");
        app->callback([this] { run(); });
    }

    void run()
    {
        const auto f = data.load_features();
        const auto l = data.load_labels();
        const auto h = data.load_head();
        influence.compute_global = !no_global;
        Output o(out);
        for (auto& p : queries.load()) {
            const auto q = queries.query(std::move(p));
            const auto support = support_set(f, l, h, q);
            const auto scored = measure == "influence"
                                    ? influence_scores(f, l, h, q, lambda.value_or(h.lambda()), influence)
                                    : representer_scores(f, l, h, q, relative_g);
            const auto s = build_spectrum(scored, support);
            const auto len = spectrum_length(s);
            std::cerr << kind_name(s.kind) << " spectrum (c=" << support.query.predicted
                      << ", k=" << support.query.relative << "): support " << support.indices.size()
                      << ", entries " << len.entries << ", l span " << len.l_span << "\n";
            o.stream() << spectrum_to_json(s) << "\n";
        }
        o.finish();
    }
};

struct InfluenceValidate {
    DataArgs data;
    std::string point;
    std::optional<ClassId> test_label;
    double lambda = 0.01;
    double damping = 1e-3;
    double grad_tol = 1e-10;
    std::optional<std::uint64_t> seed;
    std::optional<double> min_r;
    std::string out;

    void add(CLI::App& root)
    {
        auto* app = root.add_subcommand(
            "influence-validate",
            "correlate influence predictions with leave-one-out retraining (default: n=30, d=5, T=2)");
        data.add(app, false);
        app->add_option("--point", point, "test feature vector (default: generated)");
        app->add_option("--test-label", test_label, "test label (default: predicted class)");
        app->add_option("--lambda", lambda, "L2 regularization strength");
        app->add_option("--damping", damping, "Hessian damping");
        app->add_option("--grad-tol", grad_tol, "training tolerance for all retrainings");
        app->add_option("--seed", seed, "seed for the generated problem (default 3, or SPECTRA_SEED)");
        app->add_option("--min-r", min_r, "exit with status 4 if Pearson r falls below this");
        app->add_option("--out", out, "output file (default stdout)");
        app->callback([this] { run(); });
    }

    void run()
    {
        const std::uint64_t s = seed.value_or(default_seed(3));
        std::optional<Blobs> generated;
        if (data.features.empty() && data.manifest.empty())
            generated = make_gaussian_classes(s, 15, 5, 2, 1.5, 1.0);
        const FeatureSet f = generated ? generated->features : data.load_features();
        const LabelVector l = generated ? generated->labels : data.load_labels();

        TrainConfig cfg;
        cfg.lambda = lambda;
        cfg.learning_rate = safe_learning_rate(f, lambda);
        cfg.grad_tol = grad_tol;
        cfg.max_iters = 2000000;
        const auto head = train_head(f, l, cfg);

        std::vector<double> f_t = point.empty() ? std::vector<double>(f.dim(), 0.5) : parse_vector(point);
        const ClassId y_t = test_label.value_or(predict(head, f_t).label);

        InfluenceConfig icfg;
        icfg.damping = damping;
        icfg.compute_global = false;
        const auto scored = influence_scores_all(f, l, head, f_t, y_t, lambda, icfg);
        std::vector<double> predicted, actual;
        const double inv_n = 1.0 / static_cast<double>(f.size());
        for (const auto& sp : scored) {
            predicted.push_back(-inv_n * sp.l);
            actual.push_back(loo_oracle(f, l, cfg, sp.index, f_t, y_t, head));
        }
        const double r = pearson(predicted, actual);
        Output o(out);
        o.stream() << json{{"n", f.size()}, {"pearson", r}, {"predicted", predicted}, {"actual", actual}}.dump()
                   << "\n";
        o.finish();
        if (min_r && !(r >= *min_r))
            throw Error(ErrorCode::ValidationFailed, "pearson r " + std::to_string(r) +
                                                       " below --min-r " + std::to_string(*min_r));
        std::cerr << "pearson r = " << r << " over " << f.size() << " removals\n";
    }
};

struct TokenSpectrumCmd {
    std::string corpus;
    std::size_t vocab = 0;
    std::string alignment;
    std::string head;
    std::string manifest;
    std::optional<TokenId> target;
    std::string context;
    std::string context_fvec;
    TokenSpectrumOptions options;
    std::string out;

    void add(CLI::App& root)
    {
        auto* app = root.add_subcommand("token-spectrum", "general spectrum for a generated token");
        app->add_option("--corpus", corpus, "corpus file (one document of token ids per line)")->required();
        app->add_option("--vocab", vocab, "vocabulary size (default: head T)");
        app->add_option("--alignment", alignment, "JSON alignment manifest for token-point embeddings")
            ->required();
        app->add_option("--head", head, "HEAD file");
        app->add_option("--manifest", manifest, "manifest naming the head");
        app->add_option("--target", target, "target token (default: from alignment)");
        app->add_option("--context", context, "embedding of the generated context (comma-separated)");
        app->add_option("--context-fvec", context_fvec, "FVEC whose first row is the context embedding");
        app->add_option("--input-len", options.input_len, "length of the input prompt in tokens");
        app->add_option("--buffer", options.buffer, "extra context length beyond the prompt");
        app->add_option("--relative", options.relative, "relative class (refused for large vocabularies)");
        app->add_option("--max-relative-classes", options.max_relative_classes,
                        "largest T for which relative spectra are computed");
        app->add_option("--out", out, "output file (default stdout)");
        app->callback([this] { run(); });
    }

    void run()
    {
        DataArgs d{manifest, "", "", head};
        const auto h = d.load_head();
        const auto a = load_alignment(alignment);
        const auto embeddings = load_feature_set(a.features);
        const auto c = load_corpus(corpus, vocab ? vocab : h.num_classes());
        const auto t = target ? *target : a.target.value_or(0);
        if (!target && !a.target)
            throw Error(ErrorCode::InvalidArgument, "no target token (use --target or set it in the alignment)");
        std::vector<double> f_t;
        if (!context.empty())
            f_t = parse_vector(context);
        else if (!context_fvec.empty())
            f_t = widen(load_feature_set(context_fvec).row(0));
        else
            throw Error(ErrorCode::InvalidArgument, "no context embedding (use --context or --context-fvec)");

        const auto ts = token_spectrum(c, embeddings, a.rows, h, f_t, t, options);
        json points = json::array();
        for (const auto& e : ts.spectrum.entries) {
            const auto& tp = ts.points[e.index];
            points.push_back({{"doc", tp.doc}, {"end", tp.end}, {"p", tp.p}});
        }
        Output o(out);
        o.stream() << json{{"target", t},
                           {"token_points", ts.points.size()},
                           {"spectrum", json::parse(spectrum_to_json(ts.spectrum))},
                           {"points", points}}
                          .dump()
                   << "\n";
        o.finish();
    }
};

struct Tfidf {
    std::string corpus;
    std::size_t vocab = 0;
    std::string generated;
    std::size_t top = 0;
    std::string out;

    void add(CLI::App& root)
    {
        auto* app = root.add_subcommand("tfidf", "TF-IDF scores of generated tokens against a corpus");
        app->add_option("--corpus", corpus, "corpus file")->required();
        app->add_option("--vocab", vocab, "vocabulary size")->required();
        app->add_option("--generated", generated, "generated token ids, space-separated")->required();
        app->add_option("--top", top, "also report the top-m positions");
        app->add_option("--out", out, "output file (default stdout)");
        app->callback([this] { run(); });
    }

    void run()
    {
        const auto c = load_corpus(corpus, vocab);
        const auto tokens = parse_token_line(generated);
        const auto scores = tfidf_scores(tokens, c);
        json j{{"scores", scores}};
        if (top)
            j["top"] = top_positions(scores, top);
        Output o(out);
        o.stream() << j.dump() << "\n";
        o.finish();
    }
};

struct Plot {
    DataArgs data;
    QueryArgs queries;
    std::string spectrum;
    PlotSpec plot;
    std::string out;

    void add(CLI::App& root)
    {
        auto* app = root.add_subcommand("plot", "render a 2D spectrum as SVG");
        data.add(app, true);
        queries.add(app, true);
        app->add_option("--spectrum", spectrum,
                        "spectrum JSON from the spectrum command (default: representer spectrum)");
        app->add_option("--width", plot.width, "canvas width in pixels");
        app->add_option("--height", plot.height, "canvas height in pixels");
        app->add_option("--out", out, "SVG output path")->required();
        app->callback([this] { run(); });
    }

    void run()
    {
        const auto f = data.load_features();
        const auto l = data.load_labels();
        const auto h = data.load_head();
        auto pts = queries.load();
        if (pts.size() != 1)
            throw Error(ErrorCode::InvalidArgument, "plot takes exactly one test point");
        const auto q = queries.query(std::move(pts.front()));
        const auto support = support_set(f, l, h, q);
        Spectrum s;
        if (!spectrum.empty()) {
            const auto bytes = read_file_bytes(spectrum);
            std::string text(bytes.begin(), bytes.end());
            // The spectrum command writes one line per test point; take the first.
            text = text.substr(0, text.find('\n'));
            s = spectrum_from_json(text);
        } else {
            s = build_spectrum(representer_scores(f, l, h, q, false), support);
        }
        render_2d_spectrum_svg(f, l, support, s, plot, out);
    }
};

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Support sets and global-to-local spectra for linear classification heads", "spectra"};
    app.require_subcommand(1);

    GenBlobs gen_blobs;
    Train train;
    Predict predict_cmd;
    Support support;
    SpectrumCmd spectrum;
    InfluenceValidate influence_validate;
    TokenSpectrumCmd token_spectrum_cmd;
    Tfidf tfidf;
    Plot plot;
    gen_blobs.add(app);
    train.add(app);
    predict_cmd.add(app);
    support.add(app);
    spectrum.add(app);
    influence_validate.add(app);
    token_spectrum_cmd.add(app);
    tfidf.add(app);
    plot.add(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::string msg = e.what();
        for (auto& ch : msg)
            if (ch == '\n')
                ch = ' ';
        std::cerr << "InvalidArgument: " << msg << "\n";
        return exit_status(ErrorCode::InvalidArgument);
    } catch (const spectra::Error& e) {
        std::string msg = e.what();
        for (auto& ch : msg)
            if (ch == '\n')
                ch = ' ';
        std::cerr << error_name(e.code()) << ": " << msg << "\n";
        return exit_status(e.code());
    } catch (const fs::filesystem_error& e) {
        std::cerr << "IoError: " << e.what() << "\n";
        return exit_status(ErrorCode::IoError);
    } catch (const std::exception& e) {
        std::cerr << "InternalError: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
