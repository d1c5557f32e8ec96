// blade: dataset generation, alignment training, evaluation, and
// Best-of-N inference over the synthetic recommendation environment.
//
// Exit codes: 0 success, 2 usage error, 1 runtime failure. Tables go to
// stdout, diagnostics to stderr.

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "blade/harness.hpp"
#include "blade/kernels.hpp"

namespace {

std::vector<std::string> split_csv(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) parts.push_back(item);
    }
    return parts;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"BLADE list-wise alignment experiments"};
    app.require_subcommand(1);

    blade::ExperimentConfig cfg;
    std::string dataset_path;
    std::string out_path;
    std::string checkpoint_path;
    std::string rewards_arg = "recall@3,recall@5,ndcg@3,ndcg@5,mgu,ild";
    std::string bon_ns_arg = "1,2,4";
    std::size_t bon_min_selections = 1000;

    app.set_config("--config", "", "Flat key=value config file; flags override it");
    app.add_option("--seed", cfg.seed, "Base seed for all generation and training");

    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
    gen->add_option("--out", out_path, "Output dataset file")->required();
    gen->add_option("--n-items", cfg.n_items, "Catalog size");
    gen->add_option("--n-genres", cfg.n_genres, "Genre universe size");
    gen->add_option("--n-contexts", cfg.n_contexts, "Number of user contexts");
    gen->add_option("--history-len", cfg.history_len, "History length per context");
    gen->add_option("--target-len", cfg.target_len, "Target set size per context");
    gen->add_option("--max-genres-per-item", cfg.max_genres_per_item,
                    "Upper bound on genres per item");

    auto* train = app.add_subcommand("train", "Warm start + alignment training");
    train->add_option("--dataset", dataset_path, "Dataset file")->required();
    train->add_option("--out-dir", out_path, "Directory for checkpoint and curve files")
        ->required();
    train->add_option("--mode", cfg.mode, "blade | static | noprior");
    train->add_option("--reward", cfg.reward_spec, "Training reward spec");
    train->add_option("--steps", cfg.steps, "Training steps");
    train->add_option("--group-size", cfg.group_size, "Rollouts per step (G)");
    train->add_option("--tau", cfg.tau, "Dynamic coefficient");
    train->add_option("--bon-n", cfg.bon_n, "N inside the proxy reward");
    train->add_option("--ref-size", cfg.ref_size, "Reference rollouts per context (M)");
    train->add_option("--lr", cfg.lr, "Learning rate");
    train->add_option("--epsilon", cfg.epsilon, "Ratio clip width");
    train->add_option("--beta-kl", cfg.beta_kl, "KL coefficient");
    train->add_option("--temperature", cfg.temperature, "Sampling temperature");
    train->add_option("--cdf-floor", cfg.cdf_floor,
                      "CDF floor; 0 selects half a pooled sample");
    train->add_option("--list-len", cfg.list_len, "Items per generated list (K)");
    train->add_option("--sft-steps", cfg.sft_steps, "Warm-start supervised steps");
    train->add_option("--sft-lr", cfg.sft_lr, "Warm-start learning rate");
    train->add_option("--eval-contexts", cfg.eval_contexts,
                      "Held-out contexts at the tail (0 = quarter)");

    auto* eval = app.add_subcommand("eval", "Greedy-decode metric table");
    eval->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
    eval->add_option("--dataset", dataset_path, "Dataset file")->required();
    eval->add_option("--rewards", rewards_arg, "Comma-separated reward specs");

    auto* bon = app.add_subcommand("bon", "Best-of-N inference sweep");
    bon->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
    bon->add_option("--dataset", dataset_path, "Dataset file")->required();
    bon->add_option("--n", bon_ns_arg, "Comma-separated N values");
    bon->add_option("--reward", cfg.reward_spec, "Selection reward spec");
    bon->add_option("--min-selections", bon_min_selections,
                    "Minimum Best-of-N selections per N");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (gen->parsed()) {
            const blade::Catalog catalog = blade::generate_catalog(
                cfg.seed, cfg.n_items, cfg.n_genres, cfg.max_genres_per_item);
            const blade::Dataset ds = blade::generate_contexts(
                catalog, cfg.seed, cfg.n_contexts, cfg.history_len, cfg.target_len);
            blade::save_dataset(ds, out_path);
            std::cout << "wrote " << out_path << ": " << ds.contexts.size()
                      << " contexts, " << catalog.n_items << " items, "
                      << catalog.n_genres << " genres\n";
        } else if (train->parsed()) {
            const blade::Dataset ds = blade::load_dataset(dataset_path);
            const blade::TrainState state = blade::run_train(cfg, ds);
            std::filesystem::create_directories(out_path);
            const auto dir = std::filesystem::path(out_path);
            blade::save_checkpoint(dir / "checkpoint.txt", state);
            blade::save_curve(dir / "curve.csv", state.curve);
            std::cout << "mode=" << cfg.mode << " steps=" << state.step
                      << " final_eval=" << state.curve.back().eval_metric << '\n'
                      << "checkpoint: " << (dir / "checkpoint.txt").string() << '\n'
                      << "curve: " << (dir / "curve.csv").string() << '\n';
        } else if (eval->parsed()) {
            const blade::Dataset ds = blade::load_dataset(dataset_path);
            const blade::TrainState state = blade::load_checkpoint(checkpoint_path);
            std::vector<blade::RewardSpec> specs;
            for (const auto& s : split_csv(rewards_arg)) {
                specs.push_back(blade::RewardSpec::parse(s));
            }
            const blade::EvalTable table = blade::run_eval(state.params, ds, specs);
            blade::write_eval_table(std::cout, table);
        } else if (bon->parsed()) {
            const blade::Dataset ds = blade::load_dataset(dataset_path);
            const blade::TrainState state = blade::load_checkpoint(checkpoint_path);
            std::vector<int> ns;
            for (const auto& s : split_csv(bon_ns_arg)) ns.push_back(std::stoi(s));
            const auto rows = blade::run_bon(state.params, ds, ns,
                                             blade::RewardSpec::parse(cfg.reward_spec),
                                             cfg.seed, bon_min_selections);
            blade::write_bon_table(std::cout, rows);
        }
    } catch (const std::exception& e) {
        std::cerr << "blade: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
