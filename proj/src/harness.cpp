#include "gcd/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "gcd/errors.hpp"
#include "gcd/rng.hpp"
#include "gcd/sensitivity.hpp"

namespace gcd::harness {

using json = nlohmann::json;
namespace fs = std::filesystem;

// ---- config -----------------------------------------------------------------

std::vector<attacks::AttackConfig> default_attack_suite() {
    using attacks::Kind;
    using attacks::Mode;
    std::vector<attacks::AttackConfig> suite;
    auto push = [&](Kind kind, Mode mode) {
        attacks::AttackConfig c;
        c.kind = kind;
        c.mode = mode;
        if (kind == Kind::Fgsm) c.epsilon = 0.2;
        if (kind == Kind::Pgd) {
            c.epsilon = 0.3;
            c.steps = 40;
            c.step_size = 0.02;
        }
        if (kind == Kind::Ddn) c.steps = 100;
        suite.push_back(c);
    };
    push(Kind::Fgsm, Mode::Untargeted);
    push(Kind::Pgd, Mode::Untargeted);
    push(Kind::Pgd, Mode::Targeted);
    push(Kind::DeepFool, Mode::Untargeted);
    push(Kind::CwL2, Mode::Untargeted);
    push(Kind::CwL2, Mode::Targeted);
    push(Kind::Ddn, Mode::Untargeted);
    push(Kind::Ddn, Mode::Targeted);
    return suite;
}

std::string attack_label(const attacks::AttackConfig& config) {
    return attacks::kind_name(config.kind) + (config.mode == attacks::Mode::Untargeted ? "-u" : "-t");
}

attacks::AttackConfig attack_from_label(const std::string& label) {
    const auto dash = label.rfind('-');
    if (dash == std::string::npos || dash + 2 != label.size() ||
        (label[dash + 1] != 'u' && label[dash + 1] != 't'))
        throw ConfigError("attack label '" + label + "' must look like 'pgd-u' or 'cw-t'");
    for (auto& c : default_attack_suite())
        if (attack_label(c) == label) return c;
    // a kind/mode pair outside the default suite, e.g. fgsm with custom use
    attacks::AttackConfig c;
    c.kind = attacks::kind_from_name(label.substr(0, dash));
    c.mode = label[dash + 1] == 'u' ? attacks::Mode::Untargeted : attacks::Mode::Targeted;
    return c;
}

namespace {

nn::TrainConfig train_config_from(const json& j, const nn::TrainConfig& defaults) {
    nn::TrainConfig c = defaults;
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.lr = j.value("lr", c.lr);
    c.momentum = j.value("momentum", c.momentum);
    c.seed = j.value("seed", c.seed);
    c.early_stop_accuracy = j.value("early_stop_accuracy", c.early_stop_accuracy);
    return c;
}

json train_config_json(const nn::TrainConfig& c) {
    return {{"epochs", c.epochs},       {"batch_size", c.batch_size},
            {"lr", c.lr},               {"momentum", c.momentum},
            {"seed", c.seed},           {"early_stop_accuracy", c.early_stop_accuracy}};
}

attacks::AttackConfig attack_config_from(const json& j) {
    attacks::AttackConfig c;
    c.kind = attacks::kind_from_name(j.at("kind").get<std::string>());
    const std::string mode = j.value("mode", std::string("untargeted"));
    if (mode == "untargeted")
        c.mode = attacks::Mode::Untargeted;
    else if (mode == "targeted")
        c.mode = attacks::Mode::Targeted;
    else
        throw ConfigError("attack mode must be 'untargeted' or 'targeted', got '" + mode + "'");
    attacks::AttackConfig defaults;
    for (const auto& d : default_attack_suite())
        if (d.kind == c.kind && d.mode == c.mode) defaults = d;
    c.target_class = j.value("target_class", -1);
    c.epsilon = j.value("epsilon", defaults.kind == c.kind ? defaults.epsilon : c.epsilon);
    c.steps = j.value("steps", defaults.kind == c.kind ? defaults.steps : c.steps);
    c.step_size = j.value("step_size", defaults.kind == c.kind ? defaults.step_size : c.step_size);
    c.random_start = j.value("random_start", true);
    c.deepfool_max_steps = j.value("deepfool_max_steps", c.deepfool_max_steps);
    c.overshoot = j.value("overshoot", c.overshoot);
    c.cw_confidence = j.value("cw_confidence", c.cw_confidence);
    c.cw_c_search_steps = j.value("cw_c_search_steps", c.cw_c_search_steps);
    c.cw_inner_steps = j.value("cw_inner_steps", c.cw_inner_steps);
    c.cw_lr = j.value("cw_lr", c.cw_lr);
    c.ddn_gamma = j.value("ddn_gamma", c.ddn_gamma);
    c.ddn_init_norm = j.value("ddn_init_norm", c.ddn_init_norm);
    c.beta = j.value("beta", c.beta);
    return c;
}

json attack_config_json(const attacks::AttackConfig& c) {
    return {{"kind", attacks::kind_name(c.kind)},
            {"mode", c.mode == attacks::Mode::Untargeted ? "untargeted" : "targeted"},
            {"target_class", c.target_class},
            {"epsilon", c.epsilon},
            {"steps", c.steps},
            {"step_size", c.step_size},
            {"random_start", c.random_start},
            {"deepfool_max_steps", c.deepfool_max_steps},
            {"overshoot", c.overshoot},
            {"cw_confidence", c.cw_confidence},
            {"cw_c_search_steps", c.cw_c_search_steps},
            {"cw_inner_steps", c.cw_inner_steps},
            {"cw_lr", c.cw_lr},
            {"ddn_gamma", c.ddn_gamma},
            {"ddn_init_norm", c.ddn_init_norm},
            {"beta", c.beta}};
}

json config_json(const ExperimentConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["out_dir"] = c.out_dir;
    j["dataset"] = {{"kind", c.dataset.kind},
                    {"train_images", c.dataset.train_images},
                    {"train_labels", c.dataset.train_labels},
                    {"test_images", c.dataset.test_images},
                    {"test_labels", c.dataset.test_labels},
                    {"train_count", c.dataset.train_count},
                    {"detector_count", c.dataset.detector_count},
                    {"test_count", c.dataset.test_count},
                    {"attack_eval_count", c.dataset.attack_eval_count},
                    {"toy", {{"per_class", c.dataset.toy.per_class},
                             {"x_min", c.dataset.toy.x_min},
                             {"x_max", c.dataset.toy.x_max},
                             {"band_offset", c.dataset.toy.band_offset},
                             {"noise", c.dataset.toy.noise}}}};
    j["model"] = train_config_json(c.model_train);
    j["detector"] = train_config_json(c.detector_train);
    j["fine_tune"] = train_config_json(c.fine_tune);
    j["attacks"] = json::array();
    for (const auto& a : c.attack_list) j["attacks"].push_back(attack_config_json(a));
    j["rectifier"] = {{"alpha_untargeted", c.rectifier.alpha_untargeted},
                      {"alpha_targeted", c.rectifier.alpha_targeted},
                      {"duplicates", c.rectifier.duplicates},
                      {"bernoulli_p", c.rectifier.bernoulli_p},
                      {"adv_pool_limit", c.rectifier.adv_pool_limit}};
    j["whitebox"] = {{"attacks", c.whitebox.attacks},
                     {"betas", c.whitebox.betas},
                     {"eval_count", c.whitebox.eval_count}};
    j["alpha_sweep"] = {{"grid", c.alpha_sweep.grid},
                        {"suites", c.alpha_sweep.suites},
                        {"adv_pool_limit", c.alpha_sweep.adv_pool_limit},
                        {"eval_count", c.alpha_sweep.eval_count},
                        {"duplicates", c.alpha_sweep.duplicates}};
    return j;
}

} // namespace

ExperimentConfig default_config() {
    ExperimentConfig c;
    c.attack_list = default_attack_suite();
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config file '" + path + "' does not exist or is unreadable");
    json j;
    try {
        j = json::parse(is);
    } catch (const json::exception& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    try {
        ExperimentConfig c = default_config();
        c.seed = j.value("seed", c.seed);
        c.out_dir = j.value("out_dir", c.out_dir);
        if (j.contains("dataset")) {
            const auto& d = j["dataset"];
            c.dataset.kind = d.value("kind", c.dataset.kind);
            if (c.dataset.kind != "mnist-idx" && c.dataset.kind != "toy")
                throw ConfigError("dataset.kind must be 'mnist-idx' or 'toy'");
            c.dataset.train_images = d.value("train_images", std::string());
            c.dataset.train_labels = d.value("train_labels", std::string());
            c.dataset.test_images = d.value("test_images", std::string());
            c.dataset.test_labels = d.value("test_labels", std::string());
            c.dataset.train_count = d.value("train_count", c.dataset.train_count);
            c.dataset.detector_count = d.value("detector_count", c.dataset.detector_count);
            c.dataset.test_count = d.value("test_count", c.dataset.test_count);
            c.dataset.attack_eval_count = d.value("attack_eval_count", c.dataset.attack_eval_count);
            if (d.contains("toy")) {
                const auto& t = d["toy"];
                c.dataset.toy.per_class = t.value("per_class", c.dataset.toy.per_class);
                c.dataset.toy.x_min = t.value("x_min", c.dataset.toy.x_min);
                c.dataset.toy.x_max = t.value("x_max", c.dataset.toy.x_max);
                c.dataset.toy.band_offset = t.value("band_offset", c.dataset.toy.band_offset);
                c.dataset.toy.noise = t.value("noise", c.dataset.toy.noise);
            }
        }
        if (j.contains("model")) c.model_train = train_config_from(j["model"], c.model_train);
        if (j.contains("detector")) c.detector_train = train_config_from(j["detector"], c.detector_train);
        if (j.contains("fine_tune")) c.fine_tune = train_config_from(j["fine_tune"], c.fine_tune);
        if (j.contains("attacks")) {
            c.attack_list.clear();
            for (const auto& a : j["attacks"]) c.attack_list.push_back(attack_config_from(a));
        }
        if (j.contains("rectifier")) {
            const auto& r = j["rectifier"];
            c.rectifier.alpha_untargeted = r.value("alpha_untargeted", c.rectifier.alpha_untargeted);
            c.rectifier.alpha_targeted = r.value("alpha_targeted", c.rectifier.alpha_targeted);
            c.rectifier.duplicates = r.value("duplicates", c.rectifier.duplicates);
            c.rectifier.bernoulli_p = r.value("bernoulli_p", c.rectifier.bernoulli_p);
            c.rectifier.adv_pool_limit = r.value("adv_pool_limit", c.rectifier.adv_pool_limit);
        }
        if (j.contains("whitebox")) {
            const auto& w = j["whitebox"];
            c.whitebox.attacks = w.value("attacks", c.whitebox.attacks);
            c.whitebox.betas = w.value("betas", c.whitebox.betas);
            c.whitebox.eval_count = w.value("eval_count", c.whitebox.eval_count);
        }
        if (j.contains("alpha_sweep")) {
            const auto& a = j["alpha_sweep"];
            c.alpha_sweep.grid = a.value("grid", c.alpha_sweep.grid);
            c.alpha_sweep.suites = a.value("suites", c.alpha_sweep.suites);
            c.alpha_sweep.adv_pool_limit = a.value("adv_pool_limit", c.alpha_sweep.adv_pool_limit);
            c.alpha_sweep.eval_count = a.value("eval_count", c.alpha_sweep.eval_count);
            c.alpha_sweep.duplicates = a.value("duplicates", c.alpha_sweep.duplicates);
        }
        return c;
    } catch (const json::exception& e) {
        throw ConfigError("config file '" + path + "': " + e.what());
    }
}

std::string config_hash(const ExperimentConfig& config) {
    const std::string s = config_json(config).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---- records ----------------------------------------------------------------

namespace {

constexpr const char* kGreyboxRecords = "records_greybox.jsonl";
constexpr const char* kWhiteboxRecords = "records_whitebox.jsonl";
constexpr const char* kAlphaRecords = "records_alpha.jsonl";

class RecordWriter {
public:
    RecordWriter(const fs::path& path) : os_(path, std::ios::trunc) {
        if (!os_) throw StageError("cannot open record file '" + path.string() + "'");
    }
    void write(const json& j) {
        os_ << j.dump() << "\n";
        os_.flush();
    }

private:
    std::ofstream os_;
};

std::vector<json> read_records(const fs::path& path) {
    std::vector<json> out;
    std::ifstream is(path);
    if (!is) return out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        out.push_back(json::parse(line));
    }
    return out;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// stable first-appearance order of a record key
std::vector<std::string> distinct(const std::vector<json>& records, const std::string& table,
                                  const std::string& key) {
    std::vector<std::string> out;
    for (const auto& r : records) {
        if (r.at("table") != table) continue;
        const auto v = r.at(key).get<std::string>();
        if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
    }
    return out;
}

// ---- aggregation from records ----

std::vector<PerturbationRow> aggregate_perturbations(const std::vector<json>& records) {
    std::vector<PerturbationRow> rows;
    for (const auto& attack : distinct(records, "attack", "attack")) {
        PerturbationRow row;
        row.attack = attack;
        std::vector<double> l2s, linfs;
        for (const auto& r : records) {
            if (r.at("table") != "attack" || r.at("attack") != attack) continue;
            ++row.n;
            if (r.at("success").get<bool>()) {
                ++row.successes;
                l2s.push_back(r.at("l2").get<double>());
                linfs.push_back(r.at("linf").get<double>());
            }
        }
        row.success_rate = row.n ? static_cast<double>(row.successes) / row.n : 0.0;
        row.mean_l2 = mean_of(l2s);
        row.median_l2 = median_of(l2s);
        row.mean_linf = mean_of(linfs);
        row.median_linf = median_of(linfs);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<AucRow> aggregate_auc(const std::vector<json>& records) {
    std::vector<AucRow> rows;
    std::vector<double> clean_org, clean_is, clean_ens;
    for (const auto& r : records) {
        if (r.at("table") != "detection" || r.at("attack") != "clean") continue;
        clean_org.push_back(r.at("p_adv_org").get<double>());
        clean_is.push_back(r.at("p_adv_is").get<double>());
        clean_ens.push_back(r.at("p_adv_ens").get<double>());
    }
    for (const auto& attack : distinct(records, "detection", "attack")) {
        if (attack == "clean") continue;
        std::vector<double> a_org, a_is, a_ens;
        for (const auto& r : records) {
            if (r.at("table") != "detection" || r.at("attack") != attack) continue;
            a_org.push_back(r.at("p_adv_org").get<double>());
            a_is.push_back(r.at("p_adv_is").get<double>());
            a_ens.push_back(r.at("p_adv_ens").get<double>());
        }
        AucRow row;
        row.attack = attack;
        row.n_adv = static_cast<int>(a_org.size());
        row.det_org = detectors::auc(clean_org, a_org);
        row.det_is = detectors::auc(clean_is, a_is);
        row.ensemble = detectors::auc(clean_ens, a_ens);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<AccuracyRow> aggregate_accuracy(const std::vector<json>& records) {
    std::vector<AccuracyRow> rows;
    for (const auto& attack : distinct(records, "pipeline", "attack")) {
        AccuracyRow row;
        row.attack = attack;
        int base_all = 0, base_succ = 0, gcd_all = 0, gcd_succ = 0, n_succ = 0;
        for (const auto& r : records) {
            if (r.at("table") != "pipeline" || r.at("attack") != attack) continue;
            ++row.n;
            const bool success = r.at("success").get<bool>();
            const bool base_ok = r.at("base_correct").get<bool>();
            const bool gcd_ok = r.at("gcd_correct").get<bool>();
            if (success) ++n_succ;
            if (base_ok) ++base_all;
            if (gcd_ok) ++gcd_all;
            if (success && base_ok) ++base_succ;
            if (success && gcd_ok) ++gcd_succ;
        }
        row.success_rate = row.n ? static_cast<double>(n_succ) / row.n : 0.0;
        row.base_acc_all = row.n ? static_cast<double>(base_all) / row.n : 0.0;
        row.gcd_acc_all = row.n ? static_cast<double>(gcd_all) / row.n : 0.0;
        row.base_acc_success = n_succ ? static_cast<double>(base_succ) / n_succ : 0.0;
        row.gcd_acc_success = n_succ ? static_cast<double>(gcd_succ) / n_succ : 0.0;
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<SeparationRow> aggregate_separation(const std::vector<json>& records) {
    std::vector<SeparationRow> rows;
    std::vector<double> clean;
    for (const auto& r : records)
        if (r.at("table") == "insen" && r.at("attack") == "clean")
            clean.push_back(r.at("insen").get<double>());
    for (const auto& attack : distinct(records, "insen", "attack")) {
        if (attack == "clean") continue;
        std::vector<double> adv;
        for (const auto& r : records)
            if (r.at("table") == "insen" && r.at("attack") == attack)
                adv.push_back(r.at("insen").get<double>());
        SeparationRow row;
        row.attack = attack;
        row.median_clean = median_of(clean);
        row.median_adv = median_of(adv);
        row.ratio = row.median_clean > 0 ? row.median_adv / row.median_clean : 0.0;
        row.overlap = sensitivity::overlap_coefficient(clean, adv);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<RemovalRow> aggregate_removal(const std::vector<json>& records) {
    std::vector<RemovalRow> rows;
    std::vector<std::pair<std::string, double>> keys;
    for (const auto& r : records) {
        if (r.at("table") != "removal") continue;
        const auto key = std::make_pair(r.at("attack").get<std::string>(), r.at("percent").get<double>());
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
    }
    for (const auto& [attack, percent] : keys) {
        int n = 0, fooled = 0;
        for (const auto& r : records) {
            if (r.at("table") != "removal" || r.at("attack") != attack ||
                r.at("percent").get<double>() != percent)
                continue;
            ++n;
            if (r.at("still_fooled").get<bool>()) ++fooled;
        }
        rows.push_back({attack, percent, n ? static_cast<double>(fooled) / n : 0.0});
    }
    return rows;
}

std::vector<WhiteboxRow> aggregate_whitebox(const std::vector<json>& records) {
    std::vector<WhiteboxRow> rows;
    std::vector<std::tuple<std::string, bool, double>> keys;
    for (const auto& r : records) {
        if (r.at("table") != "whitebox") continue;
        const auto key = std::make_tuple(r.at("attack").get<std::string>(),
                                         r.at("defended").get<bool>(), r.at("beta").get<double>());
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
    }
    for (const auto& [attack, defended, beta] : keys) {
        WhiteboxRow row;
        row.attack = attack;
        row.defended = defended;
        row.beta = beta;
        std::vector<double> l2s;
        int succ = 0;
        for (const auto& r : records) {
            if (r.at("table") != "whitebox" || r.at("attack") != attack ||
                r.at("defended").get<bool>() != defended || r.at("beta").get<double>() != beta)
                continue;
            ++row.n;
            if (r.at("success").get<bool>()) {
                ++succ;
                l2s.push_back(r.at("l2").get<double>());
            }
        }
        row.success_rate = row.n ? static_cast<double>(succ) / row.n : 0.0;
        row.mean_l2_success = mean_of(l2s);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<AlphaRow> aggregate_alpha(const std::vector<json>& records) {
    std::vector<AlphaRow> rows;
    std::vector<std::pair<std::string, double>> keys;
    for (const auto& r : records) {
        if (r.at("table") != "alpha") continue;
        const auto key = std::make_pair(r.at("suite").get<std::string>(), r.at("alpha").get<double>());
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
    }
    for (const auto& [suite, alpha] : keys) {
        AlphaRow row;
        row.suite = suite;
        row.alpha = alpha;
        int correct = 0;
        for (const auto& r : records) {
            if (r.at("table") != "alpha" || r.at("suite") != suite ||
                r.at("alpha").get<double>() != alpha)
                continue;
            ++row.n;
            if (r.at("correct").get<bool>()) ++correct;
        }
        row.recovered_accuracy = row.n ? static_cast<double>(correct) / row.n : 0.0;
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---- CSV emission ----

void write_csv(const fs::path& path, const std::string& header_comment, const std::string& header,
               const std::vector<std::string>& lines) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw StageError("cannot write '" + path.string() + "'");
    os << "# " << header_comment << "\n" << header << "\n";
    for (const auto& l : lines) os << l << "\n";
}

void emit_tables(const fs::path& out_dir) {
    const auto grey = read_records(out_dir / kGreyboxRecords);
    if (!grey.empty()) {
        {
            std::vector<std::string> lines;
            for (const auto& r : aggregate_perturbations(grey))
                lines.push_back(r.attack + "," + std::to_string(r.n) + "," + std::to_string(r.successes) +
                                "," + fmt(r.success_rate) + "," + fmt(r.mean_l2) + "," + fmt(r.median_l2) +
                                "," + fmt(r.mean_linf) + "," + fmt(r.median_linf));
            write_csv(out_dir / "perturbation_stats.csv",
                      "per-attack success rate and perturbation norms over successful examples",
                      "attack,n,successes,success_rate,mean_l2,median_l2,mean_linf,median_linf", lines);
        }
        {
            std::vector<std::string> lines;
            for (const auto& r : aggregate_auc(grey))
                lines.push_back(r.attack + "," + std::to_string(r.n_adv) + "," + fmt(r.det_org) + "," +
                                fmt(r.det_is) + "," + fmt(r.ensemble));
            write_csv(out_dir / "auc_table.csv",
                      "detection AUC per attack; score is p_adversarial, negatives are the clean test slice",
                      "attack,n_adv,det_org,det_is,ensemble", lines);
        }
        {
            std::vector<std::string> lines;
            for (const auto& r : aggregate_accuracy(grey))
                lines.push_back(r.attack + "," + std::to_string(r.n) + "," + fmt(r.success_rate) + "," +
                                fmt(r.base_acc_all) + "," + fmt(r.base_acc_success) + "," +
                                fmt(r.gcd_acc_all) + "," + fmt(r.gcd_acc_success));
            write_csv(out_dir / "accuracy_table.csv",
                      "ground-truth accuracy of the base model and the full pipeline per attack",
                      "attack,n,success_rate,base_acc_all,base_acc_success,gcd_acc_all,gcd_acc_success",
                      lines);
        }
        {
            std::vector<std::string> lines;
            for (const auto& r : aggregate_separation(grey))
                lines.push_back(r.attack + "," + fmt(r.median_clean) + "," + fmt(r.median_adv) + "," +
                                fmt(r.ratio) + "," + fmt(r.overlap));
            write_csv(out_dir / "separation_summary.csv",
                      "input-sensitivity medians for clean vs adversarial sets and their overlap",
                      "attack,median_clean,median_adv,median_ratio,overlap", lines);
        }
        {
            std::vector<std::string> lines;
            for (const auto& r : aggregate_removal(grey))
                lines.push_back(r.attack + "," + fmt(r.percent) + "," + fmt(r.success_rate));
            write_csv(out_dir / "removal_table.csv",
                      "attack success after zeroing the top-k% detector-saliency pixels",
                      "attack,percent,success_rate", lines);
        }
    }
    const auto white = read_records(out_dir / kWhiteboxRecords);
    if (!white.empty()) {
        std::vector<std::string> lines;
        for (const auto& r : aggregate_whitebox(white))
            lines.push_back(r.attack + "," + std::string(r.defended ? "defended" : "undefended") + "," +
                            fmt(r.beta) + "," + std::to_string(r.n) + "," + fmt(r.success_rate) + "," +
                            fmt(r.mean_l2_success));
        write_csv(out_dir / "whitebox_table.csv",
                  "combined-loss attack success and L2 cost; undefended rows ignore the detector",
                  "attack,setting,beta,n,success_rate,mean_l2_success", lines);
    }
    const auto alpha = read_records(out_dir / kAlphaRecords);
    if (!alpha.empty()) {
        std::vector<std::string> lines;
        for (const auto& r : aggregate_alpha(alpha))
            lines.push_back(r.suite + "," + fmt(r.alpha) + "," + std::to_string(r.n) + "," +
                            fmt(r.recovered_accuracy));
        write_csv(out_dir / "alpha_sweep.csv", "recovered accuracy per masking rate",
                  "suite,alpha,n,recovered_accuracy", lines);
    }
}

// ---- pipeline helpers ----

struct DeskData {
    data::Dataset train;
    data::Dataset detector_split;
    data::Dataset test;
    data::Dataset attack_eval;
};

DeskData load_desk_data(const ExperimentConfig& c) {
    if (c.dataset.kind != "mnist-idx")
        throw ConfigError("this pipeline needs image data (dataset.kind = 'mnist-idx'); "
                          "the toy generator only feeds the boundary study");
    if (c.dataset.train_images.empty() || c.dataset.test_images.empty())
        throw ConfigError("dataset paths are not set; run make-dataset or point the config at IDX files");
    DeskData d;
    auto full_train = data::load_mnist_idx(
        c.dataset.train_images, c.dataset.train_labels,
        static_cast<size_t>(c.dataset.train_count + c.dataset.detector_count));
    if (full_train.size() < static_cast<size_t>(c.dataset.train_count + c.dataset.detector_count))
        throw ConfigError("train IDX holds " + std::to_string(full_train.size()) +
                          " examples, config wants train_count+detector_count = " +
                          std::to_string(c.dataset.train_count + c.dataset.detector_count));
    d.train = full_train.slice(0, static_cast<size_t>(c.dataset.train_count));
    d.detector_split = full_train.slice(static_cast<size_t>(c.dataset.train_count),
                                        static_cast<size_t>(c.dataset.detector_count));
    d.test = data::load_mnist_idx(c.dataset.test_images, c.dataset.test_labels,
                                  static_cast<size_t>(c.dataset.test_count));
    const auto eval_n = std::min<size_t>(d.test.size(), static_cast<size_t>(c.dataset.attack_eval_count));
    d.attack_eval = d.test.slice(0, eval_n);
    return d;
}

template <typename F>
auto stage(const std::string& name, F&& f) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError("stage '" + name + "': " + e.what());
    }
}

fs::path ckpt_path(const ExperimentConfig& c, const std::string& name) {
    return fs::path(c.out_dir) / (name + ".ckpt");
}

void write_trainlog(const fs::path& path, const std::string& model, const nn::TrainLog& log) {
    std::ofstream os(path, std::ios::app);
    for (size_t i = 0; i < log.epochs.size(); ++i)
        os << model << "," << i + 1 << "," << fmt(log.epochs[i].loss) << ","
           << fmt(log.epochs[i].accuracy) << "\n";
}

} // namespace

nn::Classifier ensure_base_model(const ExperimentConfig& config, bool* trained_fresh) {
    fs::create_directories(config.out_dir);
    const auto path = ckpt_path(config, "base");
    if (fs::exists(path)) {
        if (trained_fresh) *trained_fresh = false;
        auto m = nn::load_checkpoint(path.string());
        m.set_trainable(false);
        return m;
    }
    auto d = load_desk_data(config);
    auto model = nn::build_small_cnn(d.train.input_shape, d.train.num_classes, config.model_train.seed);
    auto log = nn::train(model, d.train, config.model_train);
    model.set_trainable(false);
    nn::save_checkpoint(model, path.string(), "base");
    std::ofstream(fs::path(config.out_dir) / "trainlog.csv", std::ios::trunc)
        << "# per-epoch mean loss and train accuracy\nmodel,epoch,loss,accuracy\n";
    write_trainlog(fs::path(config.out_dir) / "trainlog.csv", "base", log);
    if (trained_fresh) *trained_fresh = true;
    return model;
}

void run_train(const ExperimentConfig& config) {
    bool fresh = false;
    auto model = ensure_base_model(config, &fresh);
    auto d = load_desk_data(config);
    std::printf("base model %s; test accuracy %.4f\n", fresh ? "trained" : "loaded from checkpoint",
                nn::accuracy(model, d.test));
}

namespace {

struct GreyboxState {
    DeskData data;
    nn::Classifier base;
    detectors::DetectorEnsemble ensemble;
    std::vector<attacks::AttackConfig> attack_configs;
    std::vector<attacks::AdversarialBatch> batches; // aligned with attack_configs
    detectors::DetectorDataset det_data;
    nn::Classifier rectifier_model;
};

void run_attack_matrix(const ExperimentConfig& config, GreyboxState& st, RecordWriter* rec) {
    st.batches.resize(st.attack_configs.size());
    for (size_t a = 0; a < st.attack_configs.size(); ++a) {
        attacks::AttackConfig cfg = st.attack_configs[a];
        cfg.seed = derive_seed(config.seed, 0xa77ac0 + a);
        st.batches[a] = attacks::attack_batch(st.base, st.data.attack_eval, cfg);
        if (rec) {
            const auto label = attack_label(cfg);
            for (size_t i = 0; i < st.batches[a].examples.size(); ++i) {
                const auto& ex = st.batches[a].examples[i];
                rec->write({{"table", "attack"},
                            {"attack", label},
                            {"id", i},
                            {"success", ex.success},
                            {"l2", ex.l2},
                            {"linf", ex.linf},
                            {"label_clean", ex.label_clean},
                            {"label_adv", ex.label_adv},
                            {"true_label", st.data.attack_eval.items[i].label},
                            {"iterations", ex.iterations}});
            }
        }
    }
}

std::vector<rectifier::LabeledAdversarial> rectifier_pool(const ExperimentConfig& config,
                                                          const GreyboxState& st) {
    std::vector<rectifier::LabeledAdversarial> pool;
    for (const auto& rec : st.det_data.adv_pool) pool.push_back({rec.perturbed, rec.true_label});
    auto rng = make_engine(derive_seed(config.seed, 0x9001));
    std::shuffle(pool.begin(), pool.end(), rng);
    if (pool.size() > static_cast<size_t>(config.rectifier.adv_pool_limit))
        pool.resize(static_cast<size_t>(config.rectifier.adv_pool_limit));
    return pool;
}

} // namespace

ReportBundle run_greybox_eval(const ExperimentConfig& config) {
    fs::create_directories(config.out_dir);
    const fs::path out(config.out_dir);
    RecordWriter rec(out / kGreyboxRecords);

    GreyboxState st;
    stage("dataset", [&] { st.data = load_desk_data(config); });
    stage("base-model", [&] { st.base = ensure_base_model(config); });
    st.attack_configs = config.attack_list.empty() ? default_attack_suite() : config.attack_list;

    stage("attacks", [&] { run_attack_matrix(config, st, &rec); });

    stage("sensitivity", [&] {
        std::vector<std::vector<double>> clean_inputs;
        for (const auto& ex : st.data.attack_eval.items) clean_inputs.push_back(ex.x);
        bool clean_written = false;
        for (size_t a = 0; a < st.attack_configs.size(); ++a) {
            std::vector<std::vector<double>> adv;
            for (const auto& ex : st.batches[a].examples)
                if (ex.success) adv.push_back(ex.perturbed);
            if (adv.empty()) continue;
            const auto label = attack_label(st.attack_configs[a]);
            auto report = sensitivity::sensitivity_separation_study(
                st.base, clean_inputs, adv, (out / ("insen_" + label + ".csv")).string());
            if (!clean_written) {
                for (size_t i = 0; i < report.insen_clean.size(); ++i)
                    rec.write({{"table", "insen"}, {"attack", "clean"}, {"id", i},
                               {"insen", report.insen_clean[i]}});
                clean_written = true;
            }
            for (size_t i = 0; i < report.insen_adv.size(); ++i)
                rec.write({{"table", "insen"}, {"attack", label}, {"id", i},
                           {"insen", report.insen_adv[i]}});
        }
    });

    stage("detectors", [&] {
        const auto org_path = ckpt_path(config, "det_org");
        const auto is_path = ckpt_path(config, "det_is");
        st.det_data = detectors::build_detector_dataset(st.base, st.data.detector_split,
                                                        st.attack_configs,
                                                        derive_seed(config.seed, 0xde7));
        if (fs::exists(org_path) && fs::exists(is_path)) {
            st.ensemble.org = detectors::Detector::load(org_path.string());
            st.ensemble.is = detectors::Detector::load(is_path.string());
        } else {
            st.ensemble.org = detectors::Detector::create(st.data.train.input_shape,
                                                          detectors::Source::Org,
                                                          derive_seed(config.seed, 0x0191));
            st.ensemble.is = detectors::Detector::create(st.data.train.input_shape,
                                                         detectors::Source::Is,
                                                         derive_seed(config.seed, 0x0151));
            auto log_o = st.ensemble.org.fit(st.det_data.org_view, config.detector_train);
            nn::TrainConfig is_cfg = config.detector_train;
            is_cfg.seed = derive_seed(config.detector_train.seed, 2);
            auto log_i = st.ensemble.is.fit(st.det_data.is_view, is_cfg);
            st.ensemble.org.save(org_path.string());
            st.ensemble.is.save(is_path.string());
            write_trainlog(out / "trainlog.csv", "det_org", log_o);
            write_trainlog(out / "trainlog.csv", "det_is", log_i);
        }
        st.ensemble.base = &st.base;
    });

    stage("detection", [&] {
        auto score = [&](const std::vector<double>& x, const std::string& label, size_t id) {
            const auto gmap = st.ensemble.gradient_map_of(x);
            const auto vo = st.ensemble.org.verdict(x);
            const auto vi = st.ensemble.is.verdict(gmap);
            const auto ve = detectors::ensemble_verdict(vo, vi);
            rec.write({{"table", "detection"},
                       {"attack", label},
                       {"id", id},
                       {"p_adv_org", vo.p_adversarial},
                       {"p_adv_is", vi.p_adversarial},
                       {"p_adv_ens", ve.p_adversarial},
                       {"source", detectors::source_name(ve.source)}});
        };
        for (size_t i = 0; i < st.data.attack_eval.items.size(); ++i)
            score(st.data.attack_eval.items[i].x, "clean", i);
        for (size_t a = 0; a < st.attack_configs.size(); ++a) {
            const auto label = attack_label(st.attack_configs[a]);
            for (size_t i = 0; i < st.batches[a].examples.size(); ++i)
                if (st.batches[a].examples[i].success) score(st.batches[a].examples[i].perturbed, label, i);
        }
    });

    stage("removal", [&] {
        const double percents[] = {5.0, 10.0};
        for (size_t a = 0; a < st.attack_configs.size(); ++a) {
            const auto& cfg = st.attack_configs[a];
            if (cfg.mode != attacks::Mode::Untargeted) continue;
            if (cfg.kind != attacks::Kind::DeepFool && cfg.kind != attacks::Kind::CwL2 &&
                cfg.kind != attacks::Kind::Ddn)
                continue;
            std::vector<attacks::AdversarialExample> successes;
            for (const auto& ex : st.batches[a].examples)
                if (ex.success) successes.push_back(ex);
            if (successes.empty()) continue;
            std::vector<std::vector<std::uint8_t>> flags;
            auto rows = rectifier::saliency_removal_experiment(st.base, st.ensemble, successes,
                                                               percents, &flags);
            const auto label = attack_label(cfg);
            for (size_t p = 0; p < rows.size(); ++p)
                for (size_t i = 0; i < flags[p].size(); ++i)
                    rec.write({{"table", "removal"},
                               {"attack", label},
                               {"percent", rows[p].percent},
                               {"id", i},
                               {"still_fooled", flags[p][i] != 0}});
        }
    });

    stage("rectifier", [&] {
        const auto path = ckpt_path(config, "rectifier");
        if (fs::exists(path)) {
            st.rectifier_model = nn::load_checkpoint(path.string());
            st.rectifier_model.set_trainable(false);
            return;
        }
        auto pool = rectifier_pool(config, st);
        st.rectifier_model = rectifier::build_rectifier(
            st.base, st.ensemble, pool, config.rectifier.alpha_untargeted,
            config.rectifier.duplicates, config.rectifier.bernoulli_p, config.fine_tune,
            derive_seed(config.seed, 0x2ec7));
        nn::save_checkpoint(st.rectifier_model, path.string(), "rectifier");
    });

    ReportBundle bundle;
    bundle.out_dir = config.out_dir;

    stage("end-to-end", [&] {
        auto run_case = [&](const std::vector<double>& x, int true_label, bool success,
                            const std::string& label, size_t id, double alpha) {
            const auto verdict = rectifier::gcd_predict(st.base, st.ensemble, st.rectifier_model, x,
                                                        alpha, config.rectifier.bernoulli_p,
                                                        derive_seed(config.seed, 0xe2e, id));
            rec.write({{"table", "pipeline"},
                       {"attack", label},
                       {"id", id},
                       {"success", success},
                       {"true_label", true_label},
                       {"base_correct", st.base.predict(x) == true_label},
                       {"gcd_correct", verdict.label == true_label},
                       {"gcd_label", verdict.label},
                       {"route", verdict.route == rectifier::GcdVerdict::Route::BaseModel
                                     ? "base" : "rectifier"}});
        };
        for (size_t i = 0; i < st.data.attack_eval.items.size(); ++i)
            run_case(st.data.attack_eval.items[i].x, st.data.attack_eval.items[i].label, false,
                     "clean", i, config.rectifier.alpha_untargeted);
        for (size_t a = 0; a < st.attack_configs.size(); ++a) {
            const auto& cfg = st.attack_configs[a];
            const auto label = attack_label(cfg);
            const double alpha = cfg.mode == attacks::Mode::Untargeted
                                     ? config.rectifier.alpha_untargeted
                                     : config.rectifier.alpha_targeted;
            for (size_t i = 0; i < st.batches[a].examples.size(); ++i) {
                const auto& ex = st.batches[a].examples[i];
                run_case(ex.perturbed, st.data.attack_eval.items[i].label, ex.success, label, i, alpha);
            }
        }
        bundle.clean_base_accuracy = nn::accuracy(st.base, st.data.test);
        bundle.rectifier_clean_accuracy = nn::accuracy(st.rectifier_model, st.data.test);
    });

    stage("report", [&] {
        std::ofstream meta(out / "metadata.json", std::ios::trunc);
        json m;
        m["config"] = config_json(config);
        m["config_hash"] = config_hash(config);
        m["records"] = {kGreyboxRecords};
        meta << m.dump(2) << "\n";
        emit_tables(out);
    });

    const auto records = read_records(out / kGreyboxRecords);
    bundle.auc_table = aggregate_auc(records);
    bundle.accuracy_table = aggregate_accuracy(records);
    bundle.perturbation_table = aggregate_perturbations(records);
    bundle.separation_table = aggregate_separation(records);
    bundle.removal_table = aggregate_removal(records);
    for (const auto& row : bundle.accuracy_table)
        if (row.attack == "clean") bundle.clean_gcd_accuracy = row.gcd_acc_all;
    return bundle;
}

void run_attack_stage(const ExperimentConfig& config) {
    fs::create_directories(config.out_dir);
    GreyboxState st;
    st.data = load_desk_data(config);
    st.base = ensure_base_model(config);
    st.attack_configs = config.attack_list.empty() ? default_attack_suite() : config.attack_list;
    RecordWriter rec(fs::path(config.out_dir) / kGreyboxRecords);
    run_attack_matrix(config, st, &rec);
    emit_tables(config.out_dir);
    for (size_t a = 0; a < st.attack_configs.size(); ++a)
        std::printf("%-12s success %.3f  median L2 %.4f  median Linf %.4f\n",
                    attack_label(st.attack_configs[a]).c_str(), st.batches[a].stats.success_rate,
                    st.batches[a].stats.median_l2, st.batches[a].stats.median_linf);
}

void run_detect_train(const ExperimentConfig& config) {
    fs::create_directories(config.out_dir);
    auto data = load_desk_data(config);
    auto base = ensure_base_model(config);
    auto configs = config.attack_list.empty() ? default_attack_suite() : config.attack_list;
    auto det_data = detectors::build_detector_dataset(base, data.detector_split, configs,
                                                      derive_seed(config.seed, 0xde7));
    auto org = detectors::Detector::create(data.train.input_shape, detectors::Source::Org,
                                           derive_seed(config.seed, 0x0191));
    auto is = detectors::Detector::create(data.train.input_shape, detectors::Source::Is,
                                          derive_seed(config.seed, 0x0151));
    org.fit(det_data.org_view, config.detector_train);
    nn::TrainConfig is_cfg = config.detector_train;
    is_cfg.seed = derive_seed(config.detector_train.seed, 2);
    is.fit(det_data.is_view, is_cfg);
    org.save(ckpt_path(config, "det_org").string());
    is.save(ckpt_path(config, "det_is").string());
    std::printf("detectors trained on %zu org / %zu is samples\n", det_data.org_view.size(),
                det_data.is_view.size());
}

WhiteboxBundle run_whitebox_eval(const ExperimentConfig& config) {
    const fs::path out(config.out_dir);
    auto require = [&](const std::string& name) {
        const auto p = ckpt_path(config, name);
        if (!fs::exists(p))
            throw StageError("stage 'artifacts': missing " + p.string() + "; run eval-greybox first");
        return p.string();
    };

    WhiteboxBundle bundle;
    bundle.out_dir = config.out_dir;
    GreyboxState st;
    stage("artifacts", [&] {
        st.data = load_desk_data(config);
        st.base = nn::load_checkpoint(require("base"));
        st.base.set_trainable(false);
        st.ensemble.org = detectors::Detector::load(require("det_org"));
        st.ensemble.is = detectors::Detector::load(require("det_is"));
        st.ensemble.base = &st.base;
    });

    RecordWriter rec(out / kWhiteboxRecords);
    stage("whitebox-attacks", [&] {
        const auto eval_n = std::min<size_t>(st.data.test.size(),
                                             static_cast<size_t>(config.whitebox.eval_count));
        auto eval_set = st.data.test.slice(0, eval_n);
        for (size_t a = 0; a < config.whitebox.attacks.size(); ++a) {
            auto base_cfg = attack_from_label(config.whitebox.attacks[a]);
            const auto label = attack_label(base_cfg);

            attacks::AttackConfig grey = base_cfg;
            grey.beta = 0.0;
            grey.seed = derive_seed(config.seed, 0x3b0, a);
            auto grey_batch = attacks::attack_batch(st.base, eval_set, grey);
            for (size_t i = 0; i < grey_batch.examples.size(); ++i) {
                const auto& ex = grey_batch.examples[i];
                rec.write({{"table", "whitebox"}, {"attack", label}, {"defended", false},
                           {"beta", 0.0},         {"id", i},          {"success", ex.success},
                           {"fools_base", ex.success}, {"evades", false}, {"l2", ex.l2}});
            }

            for (double beta : config.whitebox.betas) {
                attacks::AttackConfig cfg = base_cfg;
                cfg.beta = beta;
                cfg.seed = grey.seed; // same per-example streams as the baseline
                auto batch = attacks::whitebox_attack_batch(st.base, st.ensemble, eval_set, cfg);
                for (size_t i = 0; i < batch.examples.size(); ++i) {
                    const auto& ex = batch.examples[i];
                    const bool fools = ex.label_adv != ex.label_clean;
                    rec.write({{"table", "whitebox"}, {"attack", label}, {"defended", true},
                               {"beta", beta},        {"id", i},          {"success", ex.success},
                               {"fools_base", fools}, {"evades", ex.evaded_detector}, {"l2", ex.l2}});
                }
            }
        }
    });

    stage("report", [&] { emit_tables(out); });
    bundle.rows = aggregate_whitebox(read_records(out / kWhiteboxRecords));
    return bundle;
}

AlphaSweepBundle run_alpha_sweep(const ExperimentConfig& config,
                                 const std::vector<double>& grid_override) {
    const fs::path out(config.out_dir);
    auto require = [&](const std::string& name) {
        const auto p = ckpt_path(config, name);
        if (!fs::exists(p))
            throw StageError("stage 'artifacts': missing " + p.string() + "; run eval-greybox first");
        return p.string();
    };

    AlphaSweepBundle bundle;
    bundle.out_dir = config.out_dir;
    GreyboxState st;
    stage("artifacts", [&] {
        st.data = load_desk_data(config);
        st.base = nn::load_checkpoint(require("base"));
        st.base.set_trainable(false);
        st.ensemble.org = detectors::Detector::load(require("det_org"));
        st.ensemble.is = detectors::Detector::load(require("det_is"));
        st.ensemble.base = &st.base;
    });

    const auto grid = grid_override.empty() ? config.alpha_sweep.grid : grid_override;
    RecordWriter rec(out / kAlphaRecords);

    stage("alpha-sweep", [&] {
        for (const auto& suite : config.alpha_sweep.suites) {
            const bool targeted = suite == "targeted";
            if (!targeted && suite != "untargeted")
                throw ConfigError("alpha_sweep.suites entries must be 'untargeted' or 'targeted'");
            std::vector<attacks::AttackConfig> suite_cfgs;
            for (const auto& name : targeted
                     ? std::vector<std::string>{"pgd-t", "cw-t", "ddn-t"}
                     : std::vector<std::string>{"deepfool-u", "cw-u", "ddn-u"})
                suite_cfgs.push_back(attack_from_label(name));

            // fine-tuning pool from the detector split, evaluation set from test
            const auto pool_n = std::min<size_t>(st.data.detector_split.size(),
                                                 static_cast<size_t>(config.alpha_sweep.adv_pool_limit));
            auto pool_set = st.data.detector_split.slice(0, pool_n);
            const auto eval_n = std::min<size_t>(st.data.test.size(),
                                                 static_cast<size_t>(config.alpha_sweep.eval_count));
            auto eval_set = st.data.test.slice(0, eval_n);

            std::vector<rectifier::LabeledAdversarial> pool;
            struct EvalCase {
                std::vector<double> x;
                int true_label;
                std::string attack;
                size_t id;
            };
            std::vector<EvalCase> eval_cases;
            for (size_t a = 0; a < suite_cfgs.size(); ++a) {
                auto cfg = suite_cfgs[a];
                cfg.seed = derive_seed(config.seed, 0xa1fa, a);
                auto pool_batch = attacks::attack_batch(st.base, pool_set, cfg);
                for (size_t i = 0; i < pool_batch.examples.size(); ++i)
                    if (pool_batch.examples[i].success)
                        pool.push_back({pool_batch.examples[i].perturbed, pool_set.items[i].label});
                cfg.seed = derive_seed(config.seed, 0xa1fb, a);
                auto eval_batch = attacks::attack_batch(st.base, eval_set, cfg);
                for (size_t i = 0; i < eval_batch.examples.size(); ++i)
                    if (eval_batch.examples[i].success)
                        eval_cases.push_back({eval_batch.examples[i].perturbed,
                                              eval_set.items[i].label, attack_label(cfg), i});
            }
            if (pool.empty() || eval_cases.empty())
                throw StageError("alpha-sweep: no successful adversarial examples for suite " + suite);

            for (double alpha : grid) {
                auto rect = rectifier::build_rectifier(st.base, st.ensemble, pool, alpha,
                                                       config.alpha_sweep.duplicates,
                                                       config.rectifier.bernoulli_p, config.fine_tune,
                                                       derive_seed(config.seed, 0xa1fc));
                for (size_t i = 0; i < eval_cases.size(); ++i) {
                    const auto& c = eval_cases[i];
                    const auto verdict = rectifier::gcd_predict(
                        st.base, st.ensemble, rect, c.x, alpha, config.rectifier.bernoulli_p,
                        derive_seed(config.seed, 0xa1fd, i));
                    rec.write({{"table", "alpha"},
                               {"suite", suite},
                               {"alpha", alpha},
                               {"attack", c.attack},
                               {"id", c.id},
                               {"correct", verdict.label == c.true_label}});
                }
            }
        }
    });

    stage("report", [&] { emit_tables(out); });
    bundle.rows = aggregate_alpha(read_records(out / kAlphaRecords));
    return bundle;
}

void regenerate_reports(const std::string& out_dir) {
    if (!fs::exists(out_dir)) throw ConfigError("output directory '" + out_dir + "' does not exist");
    emit_tables(out_dir);
}

} // namespace gcd::harness
