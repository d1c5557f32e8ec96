#include "blade/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "blade/bon.hpp"
#include "blade/errors.hpp"

namespace blade {
namespace {

constexpr int kCheckpointVersion = 1;
constexpr std::uint64_t kBonStream = 0x626f6e21;  // "bon!"

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

ContextSplit split_contexts(std::size_t n_contexts, std::uint32_t eval_contexts) {
    if (n_contexts == 0) {
        throw std::invalid_argument("split_contexts: no contexts");
    }
    std::uint32_t n_eval = eval_contexts;
    if (n_eval == 0) {
        n_eval = std::max<std::uint32_t>(1, static_cast<std::uint32_t>(n_contexts / 4));
    }
    if (n_eval >= n_contexts) {
        throw std::invalid_argument(
            "split_contexts: eval_contexts must leave at least one training context");
    }
    ContextSplit split;
    const auto n_train = static_cast<std::uint32_t>(n_contexts) - n_eval;
    for (std::uint32_t c = 0; c < n_train; ++c) split.train_ids.push_back(c);
    for (std::uint32_t c = n_train; c < n_contexts; ++c) split.eval_ids.push_back(c);
    return split;
}

TrainStepConfig make_step_config(const ExperimentConfig& cfg,
                                 const ContextSplit& split) {
    TrainStepConfig step;
    step.group_size = cfg.group_size;
    step.bon_n = cfg.bon_n;
    step.cdf_floor = cfg.cdf_floor;
    step.reward_spec = RewardSpec::parse(cfg.reward_spec);
    step.clip.epsilon = cfg.epsilon;
    step.clip.beta_kl = cfg.beta_kl;
    step.temperature = cfg.temperature;
    step.lr = cfg.lr;
    step.seed = cfg.seed;
    step.eval_context_ids = split.eval_ids;

    if (cfg.mode == "blade") {
        step.estimator_mode = EstimatorMode::blade;
        step.tau = cfg.tau;
    } else if (cfg.mode == "static") {
        step.estimator_mode = EstimatorMode::blade;
        step.tau = 0.0;
    } else if (cfg.mode == "noprior") {
        step.estimator_mode = EstimatorMode::batch_only;
        step.tau = cfg.tau;
    } else {
        throw std::invalid_argument("unknown mode \"" + cfg.mode +
                                    "\" (expected blade, static, or noprior)");
    }
    return step;
}

TrainState run_train(const ExperimentConfig& cfg, const Dataset& dataset) {
    if (cfg.steps < 0) throw std::invalid_argument("run_train: negative steps");
    const ContextSplit split =
        split_contexts(dataset.contexts.size(), cfg.eval_contexts);
    const TrainStepConfig step_cfg = make_step_config(cfg, split);

    WarmStartConfig warm;
    warm.sft_steps = cfg.sft_steps;
    warm.lr = cfg.sft_lr;
    warm.ref_size = cfg.ref_size;
    warm.seed = cfg.seed;
    warm.reward_spec = step_cfg.reward_spec;
    warm.list_len = cfg.list_len;

    TrainState state = warm_start(dataset, warm);

    CurvePoint start;
    start.step = 0;
    start.eval_metric = greedy_eval(state.params, dataset, step_cfg.reward_spec,
                                    split.eval_ids);
    state.curve.push_back(start);

    for (int s = 0; s < cfg.steps; ++s) {
        const std::uint32_t ctx =
            split.train_ids[static_cast<std::size_t>(s) % split.train_ids.size()];
        blade_train_step(state, dataset, ctx, step_cfg);
    }
    return state;
}

void save_checkpoint(const std::filesystem::path& path, const TrainState& state) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("save_checkpoint: cannot open " + path.string());
    }
    out << "blade-checkpoint " << kCheckpointVersion << '\n';
    out << "step " << state.step << '\n';
    out << "policy\n";
    write_logits(out, state.params);
    out << "ref_policy\n";
    write_logits(out, state.ref_params);
    out << "refstats " << state.refstats.size() << '\n';
    for (const auto& stats : state.refstats) {
        out << stats.size();
        for (double r : stats.sorted_rewards) out << ' ' << fmt(r);
        out << '\n';
    }
    if (!out) {
        throw std::runtime_error("save_checkpoint: write failed for " + path.string());
    }
}

namespace {

std::string expect_line(std::istream& in, std::size_t& lineno, const char* what) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError("checkpoint line " + std::to_string(lineno + 1) +
                         ": missing " + what);
    }
    ++lineno;
    return line;
}

}  // namespace

TrainState load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("load_checkpoint: cannot open " + path.string());
    }
    std::size_t lineno = 0;

    {
        std::istringstream hdr(expect_line(in, lineno, "header"));
        std::string tag;
        int version = 0;
        if (!(hdr >> tag >> version) || tag != "blade-checkpoint") {
            throw ParseError("checkpoint line 1: expected \"blade-checkpoint <version>\"");
        }
        if (version != kCheckpointVersion) {
            throw VersionError("checkpoint version " + std::to_string(version) +
                               " not supported");
        }
    }

    TrainState state;
    {
        std::istringstream sl(expect_line(in, lineno, "step record"));
        std::string tag;
        if (!(sl >> tag >> state.step) || tag != "step") {
            throw ParseError("checkpoint line " + std::to_string(lineno) +
                             ": expected \"step <n>\"");
        }
    }
    if (expect_line(in, lineno, "policy section") != "policy") {
        throw ParseError("checkpoint line " + std::to_string(lineno) +
                         ": expected \"policy\"");
    }
    state.params = read_logits(in, lineno);
    if (expect_line(in, lineno, "ref_policy section") != "ref_policy") {
        throw ParseError("checkpoint line " + std::to_string(lineno) +
                         ": expected \"ref_policy\"");
    }
    state.ref_params = read_logits(in, lineno);
    state.old_params = state.params;

    {
        std::istringstream sl(expect_line(in, lineno, "refstats section"));
        std::string tag;
        std::size_t count = 0;
        if (!(sl >> tag >> count) || tag != "refstats") {
            throw ParseError("checkpoint line " + std::to_string(lineno) +
                             ": expected \"refstats <count>\"");
        }
        for (std::size_t c = 0; c < count; ++c) {
            std::istringstream row(expect_line(in, lineno, "refstats row"));
            std::size_t m = 0;
            if (!(row >> m) || m == 0) {
                throw ParseError("checkpoint line " + std::to_string(lineno) +
                                 ": bad refstats row");
            }
            std::vector<double> rewards(m);
            for (auto& r : rewards) {
                if (!(row >> r)) {
                    throw ParseError("checkpoint line " + std::to_string(lineno) +
                                     ": expected " + std::to_string(m) + " rewards");
                }
            }
            state.refstats.push_back(
                build_reference(std::move(rewards), static_cast<std::uint32_t>(c)));
        }
    }
    return state;
}

void save_curve(const std::filesystem::path& path,
                std::span<const CurvePoint> curve) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("save_curve: cannot open " + path.string());
    }
    out << "step,mean_raw_reward,mean_proxy_reward,mean_abs_advantage,"
           "grad_norm,eval_metric\n";
    for (const auto& pt : curve) {
        out << pt.step << ',' << fmt(pt.mean_raw_reward) << ','
            << fmt(pt.mean_proxy_reward) << ',' << fmt(pt.mean_abs_advantage)
            << ',' << fmt(pt.grad_norm) << ',' << fmt(pt.eval_metric) << '\n';
    }
    if (!out) {
        throw std::runtime_error("save_curve: write failed for " + path.string());
    }
}

EvalTable run_eval(const PolicyParams& params, const Dataset& dataset,
                   const std::vector<RewardSpec>& specs) {
    if (params.n_contexts != dataset.contexts.size() ||
        params.n_items != dataset.catalog.n_items) {
        throw std::runtime_error(
            "run_eval: checkpoint shape (" + std::to_string(params.n_contexts) +
            " contexts x " + std::to_string(params.n_items) +
            " items) does not match dataset (" +
            std::to_string(dataset.contexts.size()) + " x " +
            std::to_string(dataset.catalog.n_items) + ")");
    }
    EvalTable table;
    for (const auto& spec : specs) {
        table.columns.push_back(spec.to_string());
        table.means.push_back(greedy_eval(params, dataset, spec, {}));
    }
    return table;
}

void write_eval_table(std::ostream& out, const EvalTable& table) {
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        out << table.columns[i] << (i + 1 == table.columns.size() ? '\n' : ',');
    }
    for (std::size_t i = 0; i < table.means.size(); ++i) {
        out << fmt(table.means[i]) << (i + 1 == table.means.size() ? '\n' : ',');
    }
}

std::vector<BonRow> run_bon(const PolicyParams& params, const Dataset& dataset,
                            const std::vector<int>& n_values,
                            const RewardSpec& spec, std::uint64_t seed,
                            std::size_t min_selections) {
    if (params.n_contexts != dataset.contexts.size() ||
        params.n_items != dataset.catalog.n_items) {
        throw std::runtime_error("run_bon: checkpoint/dataset shape mismatch");
    }
    const std::size_t n_ctx = dataset.contexts.size();
    const std::size_t passes = (min_selections + n_ctx - 1) / n_ctx;

    std::vector<BonRow> rows;
    std::vector<double> rewards;
    for (int n : n_values) {
        if (n < 1) throw std::invalid_argument("run_bon: N must be >= 1");
        BonRow row;
        row.n = n;
        double acc = 0.0;
        std::size_t selections = 0;
        const auto t0 = std::chrono::steady_clock::now();
        for (std::size_t pass = 0; pass < passes; ++pass) {
            for (std::uint32_t c = 0; c < n_ctx; ++c) {
                rewards.clear();
                double best = 0.0;
                for (int j = 0; j < n; ++j) {
                    Rng rng(mix_seed({seed, kBonStream,
                                      static_cast<std::uint64_t>(n), pass, c,
                                      static_cast<std::uint64_t>(j)}));
                    const Rollout ro = sample_list(params, c, 1.0, rng);
                    rewards.push_back(
                        reward(spec, ro.list, dataset.contexts[c], dataset.catalog));
                }
                best = rewards[bon_select(rewards)];
                acc += best;
                ++selections;
            }
        }
        const auto t1 = std::chrono::steady_clock::now();
        row.mean_reward = acc / static_cast<double>(selections);
        row.seconds = std::chrono::duration<double>(t1 - t0).count();
        rows.push_back(row);
    }
    return rows;
}

void write_bon_table(std::ostream& out, std::span<const BonRow> rows) {
    out << "n,mean_reward,seconds\n";
    for (const auto& row : rows) {
        out << row.n << ',' << fmt(row.mean_reward) << ',' << fmt(row.seconds)
            << '\n';
    }
}

}  // namespace blade
