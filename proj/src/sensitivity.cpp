#include "gcd/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "gcd/errors.hpp"
#include "gcd/rng.hpp"

namespace gcd::sensitivity {

namespace {

int argmax(const std::vector<double>& v) {
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

int runner_up(const std::vector<double>& v, int top) {
    int best = -1;
    for (int i = 0; i < static_cast<int>(v.size()); ++i) {
        if (i == top) continue;
        if (best < 0 || v[i] > v[best]) best = i;
    }
    return best;
}

} // namespace

std::vector<double> gradient_map(const nn::Classifier& model, const std::vector<double>& x) {
    auto f = model.forward(x, /*input_grad=*/true);
    const int yhat = argmax(f.logits->data);
    auto loss = softmax_cross_entropy(f.logits, yhat);
    backward(loss);
    if (!all_finite(f.input->grad)) throw NumericError("input_sensitivity: non-finite gradient");
    return f.input->grad;
}

SensitivityRecord input_sensitivity(const nn::Classifier& model, const std::vector<double>& x,
                                    int input_id) {
    auto f = model.forward(x, /*input_grad=*/true);
    const int yhat = argmax(f.logits->data);
    auto loss = softmax_cross_entropy(f.logits, yhat);
    backward(loss);
    if (!all_finite(f.input->grad)) throw NumericError("input_sensitivity: non-finite gradient");

    SensitivityRecord rec;
    rec.input_id = input_id;
    rec.predicted = yhat;
    rec.gradient_map = f.input->grad;
    rec.insen = l2_norm(rec.gradient_map);
    if (model.num_classes >= 2) {
        const int n = runner_up(f.logits->data, yhat);
        rec.dist_z = dist_z(model, x, yhat, n);
    }
    return rec;
}

double dist_z(const nn::Classifier& model, const std::vector<double>& x, int m, int n) {
    if (m == n) throw ContractError("dist_z: classes m and n must differ");
    if (m < 0 || n < 0 || m >= model.num_classes || n >= model.num_classes)
        throw IndexError("dist_z: class out of range");
    const auto wm = model.fc_row(m);
    const auto wn = model.fc_row(n);
    auto f = model.forward(x, false);
    const auto& z = f.z->data;
    double dot = 0.0, norm2 = 0.0;
    for (size_t i = 0; i < wm.size(); ++i) {
        const double d = wm[i] - wn[i];
        dot += d * z[i];
        norm2 += d * d;
    }
    if (norm2 <= 0.0)
        throw NumericError("dist_z: w_m equals w_n, separating hyperplane is degenerate");
    return std::abs(dot) / std::sqrt(norm2);
}

std::vector<std::vector<double>> logit_input_gradients(const nn::Classifier& model,
                                                       const std::vector<double>& x) {
    auto f = model.forward(x, /*input_grad=*/true);
    std::vector<std::vector<double>> grads(static_cast<size_t>(model.num_classes));
    for (int i = 0; i < model.num_classes; ++i) {
        auto a_i = select(f.logits, i);
        zero_grad_graph(a_i);
        backward(a_i);
        grads[static_cast<size_t>(i)] = f.input->grad;
    }
    return grads;
}

AnalyticSensitivityTerms analytic_gradient_expansion(const nn::Classifier& model,
                                                     const std::vector<double>& x) {
    if (model.num_classes < 2)
        throw ContractError("analytic_gradient_expansion needs at least 2 classes");

    auto f = model.forward(x, false);
    const auto& a = f.logits->data;
    const auto& z = f.z->data;
    const int m = argmax(a);
    const int n = runner_up(a, m);

    AnalyticSensitivityTerms terms;
    terms.m = m;
    terms.n = n;

    const auto wm = model.fc_row(m);
    const auto wn = model.fc_row(n);
    for (size_t i = 0; i < wm.size(); ++i) terms.term_i += (wm[i] - wn[i]) * z[i];

    const auto grads = logit_input_gradients(model, x);
    const size_t dim = x.size();
    terms.c1.resize(dim);
    for (size_t i = 0; i < dim; ++i) terms.c1[i] = grads[n][i] - grads[m][i];

    double den_n = 0.0;
    for (int q = 0; q < model.num_classes; ++q) {
        if (q == m)
            den_n += std::exp(a[m] - a[n]);
        else
            den_n += std::exp(a[q] - a[n]);
    }
    terms.reconstructed.assign(dim, 0.0);
    for (size_t i = 0; i < dim; ++i) terms.reconstructed[i] = terms.c1[i] / den_n;

    for (int p = 0; p < model.num_classes; ++p) {
        if (p == m || p == n) continue;
        std::vector<double> c2(dim);
        for (size_t i = 0; i < dim; ++i) c2[i] = grads[p][i] - grads[m][i];
        double den_p = 0.0;
        for (int q = 0; q < model.num_classes; ++q) den_p += std::exp(a[q] - a[p]);
        for (size_t i = 0; i < dim; ++i) terms.reconstructed[i] += c2[i] / den_p;
        terms.c2.push_back(std::move(c2));
    }
    return terms;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2)
        throw ContractError("spearman: need two equally sized lists with >= 2 entries");
    auto ranks = [](const std::vector<double>& v) {
        std::vector<size_t> order(v.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](size_t i, size_t j) { return v[i] < v[j]; });
        std::vector<double> r(v.size());
        size_t i = 0;
        while (i < order.size()) {
            size_t j = i;
            while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
            const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
            for (size_t k = i; k <= j; ++k) r[order[k]] = avg;
            i = j + 1;
        }
        return r;
    };
    const auto ra = ranks(a);
    const auto rb = ranks(b);
    double ma = 0.0, mb = 0.0;
    for (size_t i = 0; i < ra.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= static_cast<double>(ra.size());
    mb /= static_cast<double>(rb.size());
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (size_t i = 0; i < ra.size(); ++i) {
        cov += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (va <= 0.0 || vb <= 0.0) return 0.0;
    return cov / std::sqrt(va * vb);
}

ToyStudyReport toy_boundary_study(std::uint64_t seed, const std::string& csv_path) {
    data::ToyParams params;
    auto dataset = data::generate_toy_dataset(params, derive_seed(seed, 11));
    auto model = nn::build_toy_net(derive_seed(seed, 12));

    nn::TrainConfig tc;
    tc.epochs = 200;
    tc.batch_size = 16;
    tc.lr = 0.05;
    tc.momentum = 0.9;
    tc.seed = derive_seed(seed, 13);
    tc.early_stop_accuracy = 0.995;
    nn::train(model, dataset, tc);
    model.set_trainable(false);

    ToyStudyReport report;
    report.toy_accuracy = nn::accuracy(model, dataset);

    std::ofstream csv;
    if (!csv_path.empty()) {
        csv.open(csv_path);
        if (!csv) throw ConfigError("toy_boundary_study: cannot write '" + csv_path + "'");
        csv << "# kind: grid|train; x1,x2: input coords; predicted: model label; "
               "dist_z: boundary distance in representation space; insen: input sensitivity\n";
        csv << "kind,x1,x2,predicted,dist_z,insen\n";
    }

    constexpr int kGrid = 100;
    const double x1_lo = -3.0, x1_hi = 3.0, x2_lo = -4.0, x2_hi = 4.0;
    std::vector<double> dists, insens;
    dists.reserve(kGrid * kGrid);
    insens.reserve(kGrid * kGrid);
    char buf[160];
    for (int i = 0; i < kGrid; ++i)
        for (int j = 0; j < kGrid; ++j) {
            const double x1 = x1_lo + (x1_hi - x1_lo) * i / (kGrid - 1);
            const double x2 = x2_lo + (x2_hi - x2_lo) * j / (kGrid - 1);
            auto rec = input_sensitivity(model, {x1, x2}, i * kGrid + j);
            if (!std::isfinite(rec.insen) || !std::isfinite(rec.dist_z))
                throw NumericError("toy_boundary_study: non-finite study value");
            if (rec.dist_z == 0.0 && rec.insen == 0.0) ++report.degenerate_points;
            dists.push_back(rec.dist_z);
            insens.push_back(rec.insen);
            if (csv) {
                std::snprintf(buf, sizeof(buf), "grid,%.6f,%.6f,%d,%.9g,%.9g\n", x1, x2,
                              rec.predicted, rec.dist_z, rec.insen);
                csv << buf;
            }
        }
    for (size_t i = 0; i < dataset.items.size() && csv; ++i) {
        const auto& ex = dataset.items[i];
        auto rec = input_sensitivity(model, ex.x, static_cast<int>(i));
        std::snprintf(buf, sizeof(buf), "train,%.6f,%.6f,%d,%.9g,%.9g\n", ex.x[0], ex.x[1],
                      rec.predicted, rec.dist_z, rec.insen);
        csv << buf;
    }

    report.grid_rows = kGrid * kGrid;
    report.spearman_dist_insen = spearman(dists, insens);

    const size_t at_min = static_cast<size_t>(std::min_element(dists.begin(), dists.end()) - dists.begin());
    report.min_dist_z = dists[at_min];
    report.insen_at_min_dist = insens[at_min];
    auto sorted = insens;
    std::sort(sorted.begin(), sorted.end());
    report.insen_top_decile = sorted[static_cast<size_t>(0.9 * (sorted.size() - 1))];
    return report;
}

namespace {

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

double overlap_coefficient(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) return 0.0;
    constexpr int kBins = 64;
    double lo = a[0], hi = a[0];
    for (double v : a) { lo = std::min(lo, v); hi = std::max(hi, v); }
    for (double v : b) { lo = std::min(lo, v); hi = std::max(hi, v); }
    if (hi <= lo) return 1.0; // all mass in one bin on both sides
    std::vector<double> ha(kBins, 0.0), hb(kBins, 0.0);
    auto bin = [&](double v) {
        int k = static_cast<int>((v - lo) / (hi - lo) * kBins);
        return std::clamp(k, 0, kBins - 1);
    };
    for (double v : a) ha[static_cast<size_t>(bin(v))] += 1.0 / static_cast<double>(a.size());
    for (double v : b) hb[static_cast<size_t>(bin(v))] += 1.0 / static_cast<double>(b.size());
    double s = 0.0;
    for (int k = 0; k < kBins; ++k) s += std::min(ha[static_cast<size_t>(k)], hb[static_cast<size_t>(k)]);
    return s;
}

SeparationReport sensitivity_separation_study(const nn::Classifier& model,
                                              const std::vector<std::vector<double>>& clean,
                                              const std::vector<std::vector<double>>& adv,
                                              const std::string& csv_path) {
    if (clean.empty() || adv.empty())
        throw ContractError("sensitivity_separation_study: both sets must be non-empty");

    SeparationReport report;
    report.insen_clean.resize(clean.size());
    report.insen_adv.resize(adv.size());
    const auto nc = static_cast<std::int64_t>(clean.size());
    const auto na = static_cast<std::int64_t>(adv.size());
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < nc; ++i)
        report.insen_clean[static_cast<size_t>(i)] =
            input_sensitivity(model, clean[static_cast<size_t>(i)], static_cast<int>(i)).insen;
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < na; ++i)
        report.insen_adv[static_cast<size_t>(i)] =
            input_sensitivity(model, adv[static_cast<size_t>(i)], static_cast<int>(i)).insen;

    report.median_clean = median(report.insen_clean);
    report.median_adv = median(report.insen_adv);
    report.median_ratio = report.median_clean > 0.0 ? report.median_adv / report.median_clean
                                                    : std::numeric_limits<double>::infinity();
    report.overlap_coefficient = overlap_coefficient(report.insen_clean, report.insen_adv);

    if (!csv_path.empty()) {
        std::ofstream csv(csv_path);
        if (!csv) throw ConfigError("sensitivity_separation_study: cannot write '" + csv_path + "'");
        csv << "# set: clean|adv; id: example index within its set; insen: input sensitivity\n";
        csv << "set,id,insen\n";
        char buf[96];
        for (size_t i = 0; i < report.insen_clean.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "clean,%zu,%.9g\n", i, report.insen_clean[i]);
            csv << buf;
        }
        for (size_t i = 0; i < report.insen_adv.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "adv,%zu,%.9g\n", i, report.insen_adv[i]);
            csv << buf;
        }
    }
    return report;
}

} // namespace gcd::sensitivity
