#include "spectra/support.hpp"

#include "spectra/errors.hpp"

namespace spectra {

std::vector<double> boundary_normal(const LinearHead& head, ClassId c, ClassId k)
{
    if (c >= head.num_classes() || k >= head.num_classes())
        throw Error(ErrorCode::ClassOutOfRange,
                    "classes (c=" + std::to_string(c) + ", k=" + std::to_string(k) +
                        ") out of range for T=" + std::to_string(head.num_classes()));
    const auto wc = head.row(c);
    std::vector<double> w(wc.begin(), wc.end());
    if (k != c) {
        const auto wk = head.row(k);
        for (std::size_t j = 0; j < w.size(); ++j)
            w[j] -= wk[j];
    }
    return w;
}

bool supports(std::span<const double> normal, std::span<const double> test,
              std::span<const float> train)
{
    double dot = 0.0;
    for (std::size_t j = 0; j < normal.size(); ++j)
        dot += normal[j] * (test[j] - static_cast<double>(train[j]));
    return dot > 0.0;
}

SupportSet support_set(const FeatureSet& fs, const LabelVector& lv, const LinearHead& head,
                       const Query& q)
{
    check_consistent(fs, lv, head);
    auto query = resolve(head, q);
    const auto w = boundary_normal(head, query.predicted, query.relative);

    SupportSet out{{}, std::move(query), SupportKind::General};
    out.kind = out.query.general() ? SupportKind::General : SupportKind::Relative;
    const ClassId c = out.query.predicted;
    for (std::size_t i = 0; i < fs.size(); ++i)
        if (lv[i] == c && supports(w, out.query.features, fs.row(i)))
            out.indices.push_back(i);
    return out;
}

} // namespace spectra
