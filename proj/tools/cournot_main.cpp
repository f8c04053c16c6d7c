// Batch front end: load a run configuration, dispatch one workflow, emit
// JSON results and CSV traces into the output directory.

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cournot/best_response.hpp"
#include "cournot/contraction.hpp"
#include "cournot/costs.hpp"
#include "cournot/equilibrium.hpp"
#include "cournot/errors.hpp"
#include "cournot/io.hpp"
#include "cournot/measures.hpp"
#include "cournot/verification.hpp"
#include "cournot/wasserstein.hpp"

namespace {

using nlohmann::json;
using namespace cournot;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDomain = 3;
constexpr int kExitNumerical = 4;

struct RunConfig {
    json tree_json;  // inline tree, or loaded from tree_file
    std::optional<json> cost_json;
    std::string mode = "solve_iter";
    double tol = 1e-10;
    int max_iter = 10000;
    double damping = 0.0;
    std::uint64_t seed = 0;
    bool strict = false;
    std::string out_dir = ".";
    double t_param = 1.0;
    int trials = 100;
    std::vector<double> eps_list{1e-1, 1e-2, 1e-3};
    std::optional<std::string> candidate_file;
    std::optional<json> nu0_json;
};

RunConfig parse_config(const json& j) {
    RunConfig cfg;
    if (j.contains("tree_file"))
        cfg.tree_json = load_json_file(j["tree_file"].get<std::string>());
    else if (j.contains("tree"))
        cfg.tree_json = j["tree"];
    if (j.contains("cost")) cfg.cost_json = j["cost"];
    if (j.contains("mode")) cfg.mode = j["mode"].get<std::string>();
    if (j.contains("tol")) cfg.tol = j["tol"].get<double>();
    if (j.contains("max_iter")) cfg.max_iter = j["max_iter"].get<int>();
    if (j.contains("damping")) cfg.damping = j["damping"].get<double>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("strict")) cfg.strict = j["strict"].get<bool>();
    if (j.contains("t_param")) cfg.t_param = j["t_param"].get<double>();
    if (j.contains("trials")) cfg.trials = j["trials"].get<int>();
    if (j.contains("eps_list")) cfg.eps_list = j["eps_list"].get<std::vector<double>>();
    if (j.contains("candidate_file"))
        cfg.candidate_file = j["candidate_file"].get<std::string>();
    if (j.contains("nu0")) cfg.nu0_json = j["nu0"];
    if (!(cfg.tol > 0.0)) throw ConfigError("tol must be positive");
    if (!(cfg.damping >= 0.0 && cfg.damping < 1.0))
        throw ConfigError("damping must lie in [0, 1)");
    if (cfg.max_iter < 1) throw ConfigError("max_iter must be positive");
    return cfg;
}

ScenarioTree require_tree(const RunConfig& cfg) {
    if (cfg.tree_json.is_null()) throw ConfigError("this mode requires a tree (or tree_file)");
    return tree_from_json(cfg.tree_json);
}

std::unique_ptr<MeanFieldCost> require_cost(const RunConfig& cfg) {
    if (!cfg.cost_json) throw ConfigError("this mode requires a cost spec");
    return cost_from_json(*cfg.cost_json);
}

std::string timestamp_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

json config_echo(const RunConfig& cfg) {
    return json{{"mode", cfg.mode},       {"tol", cfg.tol},   {"max_iter", cfg.max_iter},
                {"damping", cfg.damping}, {"seed", cfg.seed}, {"strict", cfg.strict}};
}

void write_result(const RunConfig& cfg, json result) {
    result["timestamp"] = timestamp_now();
    result["config"] = config_echo(cfg);
    save_json_file(cfg.out_dir + "/result.json", result);
}

void write_trace(const RunConfig& cfg, const EquilibriumResult& result, int horizon) {
    std::ofstream os(cfg.out_dir + "/trace.csv");
    if (!os) throw ConfigError("cannot write " + cfg.out_dir + "/trace.csv");
    trace_to_csv(result, horizon, os);
}

ContractionCertificate certify_and_save(const RunConfig& cfg, const MeanFieldCost& cost,
                                        int horizon) {
    ContractionCertificate cert = certify(cost, horizon);
    save_json_file(cfg.out_dir + "/certificate.json", certificate_to_json(cert));
    return cert;
}

void print_certificate(const ContractionCertificate& cert) {
    std::cout << "contraction certificate (N=" << cert.N << ")\n";
    std::cout << "  lambda=" << cert.lambda << " kappa=" << cert.kappa
              << " L=" << cert.lipschitz << "\n";
    std::cout << "  k  lambda_k  kappa_k  L_k\n";
    for (int k = 0; k < cert.N; ++k)
        std::cout << "  " << (k + 1) << "  " << cert.lambda_k[k] << "  " << cert.kappa_k[k]
                  << "  " << cert.lipschitz_k[k] << "\n";
    std::cout << "  rho=" << cert.rho << "  odd_product_ok=" << cert.cond_odd_product_ok
              << "  contraction_ok=" << cert.cond_contraction_ok
              << "  convexity_ok=" << cert.convexity_ok << "  passes=" << cert.passes() << "\n";
}

int run_certify(const RunConfig& cfg) {
    auto cost = require_cost(cfg);
    const ContractionCertificate cert = certify_and_save(cfg, *cost, cost->dimension());
    print_certificate(cert);
    write_result(cfg, json{{"certificate", certificate_to_json(cert)}});
    return kExitOk;
}

int run_solve(const RunConfig& cfg, bool quadratic_method) {
    const ScenarioTree tree = require_tree(cfg);
    auto cost = require_cost(cfg);
    const ContractionCertificate cert = certify_and_save(cfg, *cost, tree.horizon());
    if (cfg.strict && !cert.passes())
        throw DomainError("strict mode: contraction certificate failed (rho=" +
                          std::to_string(cert.rho) + ")");

    EquilibriumResult result = [&] {
        if (quadratic_method) {
            const auto* quad = dynamic_cast<const QuadraticMeanFieldCost*>(cost.get());
            if (quad == nullptr)
                throw DomainError("solve_quadratic requires a quadratic-family cost");
            return solve_quadratic(tree, *quad);
        }
        IterationOptions opt;
        opt.tol = cfg.tol;
        opt.max_iter = cfg.max_iter;
        opt.damping = cfg.damping;
        const DiscreteMeasure nu0 =
            cfg.nu0_json ? measure_from_json(*cfg.nu0_json) : default_initial_measure(tree);
        return solve_by_iteration(tree, *cost, nu0, opt);
    }();

    json out = result_to_json(result);
    out["certificate_file"] = "certificate.json";
    write_result(cfg, std::move(out));
    write_trace(cfg, result, tree.horizon());
    std::cout << "method=" << (quadratic_method ? "linear_system" : "iteration")
              << " converged=" << result.converged << " iterations=" << result.iterations
              << " value=" << result.value << "\n";
    return result.converged ? kExitOk : kExitNumerical;
}

int run_verify(const RunConfig& cfg) {
    const ScenarioTree tree = require_tree(cfg);
    auto cost = require_cost(cfg);
    EquilibriumResult candidate = [&] {
        if (cfg.candidate_file) {
            const json j = load_json_file(*cfg.candidate_file);
            return EquilibriumResult{measure_from_json(j.at("nu_hat")),
                                     map_from_json(j.at("map")),
                                     0,
                                     {},
                                     true,
                                     SolveMethod::iteration,
                                     j.value("value", 0.0),
                                     {},
                                     {}};
        }
        const auto* quad = dynamic_cast<const QuadraticMeanFieldCost*>(cost.get());
        if (quad != nullptr) return solve_quadratic(tree, *quad);
        IterationOptions opt;
        opt.tol = cfg.tol;
        opt.max_iter = cfg.max_iter;
        return solve_by_iteration(tree, *cost, default_initial_measure(tree), opt);
    }();

    const VerificationReport report = verify_equilibrium(tree, *cost, candidate, cfg.tol);
    json residuals = json::array();
    for (Eigen::Index i = 0; i < report.node_residuals.size(); ++i)
        residuals.push_back(report.node_residuals[i]);
    write_result(cfg, json{{"w1_gap", report.w1_gap},
                           {"max_residual", report.max_residual},
                           {"node_residuals", std::move(residuals)},
                           {"pass", report.pass}});
    std::cout << "verify: w1_gap=" << report.w1_gap << " max_residual=" << report.max_residual
              << " pass=" << report.pass << "\n";
    return kExitOk;
}

// Randomized sweep comparing the nested-Newton stage solver with the
// recursive grid oracle, plus the affine/generic cross-check.
int run_oracle(const RunConfig& cfg) {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<int> horizon_dist(1, 3);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    double max_grid_dev = 0.0, max_affine_dev = 0.0;
    const double grid_step = 1e-4;
    for (int trial = 0; trial < cfg.trials; ++trial) {
        const int n = horizon_dist(rng);

        std::vector<TreeNode> nodes;
        int next_id = 0;
        std::vector<int> frontier;
        const int root_count = 1 + static_cast<int>(rng() % 2);
        for (int r = 0; r < root_count; ++r) {
            nodes.push_back({next_id, -1, 1, 2.0 * unit(rng) - 1.0, 1.0 / root_count});
            frontier.push_back(next_id++);
        }
        for (int d = 2; d <= n; ++d) {
            std::vector<int> next;
            for (int parent : frontier) {
                const int kids = 1 + static_cast<int>(rng() % 2);
                for (int c = 0; c < kids; ++c) {
                    nodes.push_back({next_id, parent, d, 2.0 * unit(rng) - 1.0, 1.0 / kids});
                    next.push_back(next_id++);
                }
            }
            frontier = std::move(next);
        }
        const ScenarioTree tree(n, std::move(nodes));

        Eigen::MatrixXd root_mat =
            Eigen::MatrixXd::NullaryExpr(n, n, [&] { return 0.6 * (2.0 * unit(rng) - 1.0); });
        Eigen::MatrixXd Q = root_mat.transpose() * root_mat;
        Eigen::VectorXd b = Eigen::VectorXd::NullaryExpr(n, [&] { return unit(rng) - 0.5; });
        Eigen::MatrixXd M =
            Eigen::MatrixXd::NullaryExpr(n, n, [&] { return 0.4 * (2.0 * unit(rng) - 1.0); });
        const QuadraticMeanFieldCost cost(Q, b, M, 0.0);

        const DiscreteMeasure nu = type_measure(tree);
        const int node = tree.roots()[0];
        const StageSolution newton = stage_minimize(cost, nu, tree, node, Eigen::VectorXd(0));
        const int steps = 64;
        const GridSolution grid = grid_oracle_stage(
            cost, nu, tree, node, Eigen::VectorXd(0), newton.y_star - 0.5 * steps * grid_step,
            newton.y_star + 0.5 * steps * grid_step, steps);
        max_grid_dev = std::max(max_grid_dev, std::abs(newton.y_star - grid.y_grid));

        const BestResponse generic = best_response(tree, cost, nu);
        const AffineBestResponse affine = best_response_affine(tree, cost, marginal_means(nu));
        for (int id = 0; id < tree.node_count(); ++id)
            max_affine_dev = std::max(max_affine_dev,
                                      std::abs(generic.map.action(id) - affine.map.action(id)));
    }

    const bool pass = max_grid_dev <= grid_step && max_affine_dev <= 1e-8;
    write_result(cfg, json{{"trials", cfg.trials},
                           {"max_grid_deviation", max_grid_dev},
                           {"grid_step", grid_step},
                           {"max_affine_deviation", max_affine_dev},
                           {"pass", pass}});
    std::cout << "oracle sweep: max_grid_dev=" << max_grid_dev
              << " max_affine_dev=" << max_affine_dev << " pass=" << pass << "\n";
    return pass ? kExitOk : kExitNumerical;
}

int run_loop_probe(const RunConfig& cfg) {
    const LoopProbeResult probe = potential_loop_probe(cfg.t_param);
    PriceImpactParams params;
    params.N = 2;
    if (cfg.cost_json && cfg.cost_json->value("kind", "") == "price_impact") {
        params.K = cfg.cost_json->value("K", 1.0);
        params.A = cfg.cost_json->value("A", 0.0);
        params.S0 = cfg.cost_json->value("S0", 0.0);
        params.Q0 = cfg.cost_json->value("Q0", 1.0);
    }
    const LoopProbeResult separable = separable_loop_probe(cfg.t_param, params);

    auto to_json = [](const LoopProbeResult& r) {
        return json{{"segment_integrals", r.segment_integrals},
                    {"loop_discrepancy", r.loop_discrepancy},
                    {"t_param", r.t_param},
                    {"quadrature_error", r.quadrature_error}};
    };
    write_result(cfg, json{{"mean_coupling_term", to_json(probe)},
                           {"separable_part", to_json(separable)}});
    std::cout << "loop probe: coupling discrepancy=" << probe.loop_discrepancy
              << ", separable discrepancy=" << separable.loop_discrepancy << "\n";
    return kExitOk;
}

int run_example_n2(const RunConfig& cfg) {
    PriceImpactParams params{1.0, 0.1, 0.0, 1.0, 2};
    if (cfg.cost_json && cfg.cost_json->value("kind", "") == "price_impact") {
        params.K = cfg.cost_json->value("K", params.K);
        params.A = cfg.cost_json->value("A", params.A);
        params.S0 = cfg.cost_json->value("S0", params.S0);
        params.Q0 = cfg.cost_json->value("Q0", params.Q0);
    }
    const ScenarioTree tree = ScenarioTree::bernoulli_product(2);
    const QuadraticMeanFieldCost base = price_impact_cost(params);

    std::ofstream csv(cfg.out_dir + "/example_n2.csv");
    if (!csv) throw ConfigError("cannot write " + cfg.out_dir + "/example_n2.csv");
    csv.precision(17);
    csv << "eps,m1_linear,m2_linear,m1_iteration,m2_iteration,w1_between_methods\n";

    json rows = json::array();
    std::cout << "eps  m1  m2  |m1-1/2|  |m2-1/2|\n";
    for (double eps : cfg.eps_list) {
        const auto scaled = scale_cost(base, eps);
        const auto& quad = dynamic_cast<const QuadraticMeanFieldCost&>(*scaled);
        const EquilibriumResult linear = solve_quadratic(tree, quad);
        IterationOptions opt;
        opt.tol = cfg.tol;
        opt.max_iter = cfg.max_iter;
        const EquilibriumResult iter =
            solve_by_iteration(tree, quad, default_initial_measure(tree), opt);
        const Eigen::VectorXd m_lin = marginal_means(linear.nu_hat);
        const Eigen::VectorXd m_it = marginal_means(iter.nu_hat);
        const double w1 = wasserstein1(linear.nu_hat, iter.nu_hat);
        csv << eps << "," << m_lin[0] << "," << m_lin[1] << "," << m_it[0] << "," << m_it[1]
            << "," << w1 << "\n";
        rows.push_back(json{{"eps", eps},
                            {"m1", m_lin[0]},
                            {"m2", m_lin[1]},
                            {"m1_iteration", m_it[0]},
                            {"m2_iteration", m_it[1]},
                            {"w1_between_methods", w1}});
        std::cout << eps << "  " << m_lin[0] << "  " << m_lin[1] << "  "
                  << std::abs(m_lin[0] - 0.5) << "  " << std::abs(m_lin[1] - 0.5) << "\n";
    }
    write_result(cfg, json{{"example_n2", std::move(rows)}});
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dynamic Cournot-Nash equilibrium solver"};
    std::string config_path, mode_flag, out_flag;
    double tol_flag = -1.0;
    std::int64_t seed_flag = -1;
    bool strict_flag = false;
    app.add_option("--config", config_path, "run configuration JSON");
    app.add_option("--mode", mode_flag,
                   "certify | solve_iter | solve_quadratic | verify | oracle | loop_probe | "
                   "example_n2");
    app.add_option("--tol", tol_flag, "override stopping tolerance");
    app.add_option("--out", out_flag, "output directory");
    app.add_option("--seed", seed_flag, "override random seed");
    app.add_flag("--strict", strict_flag, "require a passing certificate before iterating");
    CLI11_PARSE(app, argc, argv);

    try {
        json config_json = json::object();
        if (!config_path.empty()) config_json = load_json_file(config_path);
        RunConfig cfg = parse_config(config_json);
        if (!mode_flag.empty()) cfg.mode = mode_flag;
        if (tol_flag > 0.0) cfg.tol = tol_flag;
        if (!out_flag.empty()) cfg.out_dir = out_flag;
        if (seed_flag >= 0) cfg.seed = static_cast<std::uint64_t>(seed_flag);
        if (strict_flag) cfg.strict = true;
        std::filesystem::create_directories(cfg.out_dir);

        if (cfg.mode == "certify") return run_certify(cfg);
        if (cfg.mode == "solve_iter") return run_solve(cfg, false);
        if (cfg.mode == "solve_quadratic") return run_solve(cfg, true);
        if (cfg.mode == "verify") return run_verify(cfg);
        if (cfg.mode == "oracle") return run_oracle(cfg);
        if (cfg.mode == "loop_probe") return run_loop_probe(cfg);
        if (cfg.mode == "example_n2") return run_example_n2(cfg);
        throw ConfigError("unknown mode \"" + cfg.mode + "\"");
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const Error& e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return kExitDomain;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDomain;
    }
}
