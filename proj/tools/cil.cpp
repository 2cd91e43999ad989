#include "commands.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>

int main(int argc, char** argv)
{
    using namespace cil::cli;

    CLI::App app{"Cost-sensitive imbalanced learning experiments"};
    app.require_subcommand(1);

    OnlineConfig online;
    auto* on = app.add_subcommand("online", "Stream a LIBSVM file through an online learner");
    on->add_option("--algo", online.algo, "Learner")
        ->required()
        ->check(CLI::IsMember(online_algorithms()));
    on->add_option("--data", online.data, "LIBSVM input")->required()->check(CLI::ExistingFile);
    on->add_option("--trace", online.trace_path, "Write the running-metric trace CSV here");
    on->add_option("--summary", online.summary_path, "Also write the summary CSV here");
    on->add_option("--trace-every", online.trace_every, "Record metrics every k samples")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    on->add_option("--batch-size", online.batch_size, "Rows read per minibatch")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    on->add_option("--C", online.C, "Aggressiveness for pa1/pa2 variants")->capture_default_str();
    on->add_option("--eta", online.eta, "Fixed ASPGD step size (adaptive when omitted)");
    on->add_option("--lambda", online.lambda, "ASPGD L1 weight")->capture_default_str();
    on->add_option("--seed", online.seed, "Random seed")->capture_default_str();

    DistributedConfig dist;
    std::string costs_text = "0.9,0.1";
    auto* di = app.add_subcommand("distributed", "Train a distributed sparse classifier");
    di->add_option("--algo", dist.algo, "Solver")
        ->required()
        ->check(CLI::IsMember(distributed_algorithms()));
    di->add_option("--train", dist.train, "Training LIBSVM file")->required()->check(CLI::ExistingFile);
    di->add_option("--test", dist.test, "Test LIBSVM file")->required()->check(CLI::ExistingFile);
    di->add_option("--workers", dist.workers, "Number of workers")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    di->add_option("--lambda", dist.lambda, "L1 weight (default 0.1 * lambda_max)");
    di->add_option("--grid", dist.grid, "Comma-separated lambda grid")->delimiter(',');
    di->add_option("--rho-admm", dist.rho_admm, "ADMM penalty")->capture_default_str();
    di->add_option("--costs", costs_text, "c_pos,c_neg")->capture_default_str();
    di->add_option("--max-iter", dist.max_iter, "Iteration cap (algorithm default when omitted)");
    di->add_option("--tol", dist.tol, "CILSD stopping tolerance")->capture_default_str();
    di->add_flag("--shuffle", dist.shuffle, "Shuffle rows before partitioning");
    di->add_option("--history", dist.history_path, "Residual history CSV");
    di->add_option("--timing", dist.timing_path, "Per-worker timing CSV");
    di->add_option("--summary", dist.summary_path, "Also write the summary CSV here");
    di->add_option("--seed", dist.seed, "Random seed")->capture_default_str();
    di->get_option("--grid")->excludes(di->get_option("--lambda"));

    SvddConfig svdd;
    auto* sv = app.add_subcommand("svdd", "Centre-of-mass anomaly detection");
    sv->add_option("--data", svdd.data, "LIBSVM input (training rows first)")
        ->required()
        ->check(CLI::ExistingFile);
    sv->add_option("--train-size", svdd.train_size, "Leading rows used for training")
        ->capture_default_str();
    sv->add_option("--sigma", svdd.sigma, "RBF width")->capture_default_str();
    sv->add_option("--delta", svdd.delta, "Confidence parameter")->capture_default_str();
    sv->add_flag("--per-feature", svdd.per_feature, "One detector per feature");
    sv->add_option("--out", svdd.out_path, "Detection CSV (stdout when omitted)");

    GenerateConfig gen;
    auto* ge = app.add_subcommand("generate", "Write a synthetic imbalanced LIBSVM dataset");
    ge->add_option("--rows", gen.spec.rows)->capture_default_str();
    ge->add_option("--features", gen.spec.features)->capture_default_str();
    ge->add_option("--density", gen.spec.density)->capture_default_str();
    ge->add_option("--positive-fraction", gen.spec.positive_fraction)->capture_default_str();
    ge->add_option("--margin", gen.spec.margin)->capture_default_str();
    ge->add_option("--label-noise", gen.spec.label_noise)->capture_default_str();
    ge->add_option("--seed", gen.spec.seed)->capture_default_str();
    ge->add_option("--out", gen.out_path, "Output file (stdout when omitted)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*on) return cmd_online(online, std::cout);
        if (*di) {
            dist.costs = parse_costs(costs_text);
            return cmd_distributed(dist, std::cout, std::cerr);
        }
        if (*sv) return cmd_svdd(svdd, std::cout, std::cerr);
        if (*ge) return cmd_generate(gen, std::cout);
    } catch (const cil::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
