#include <string>
#include <vector>

#include <CLI11.hpp>

#include "carlab/cli.hpp"
#include "carlab/version.hpp"

namespace {

struct ListFlags {
    std::string s_list, lambda_list, eps_list, delta_list;
};

std::string g_config_path;  // recognized here, loaded by the pre-scan below

void add_common(CLI::App* sub, carlab::RunConfig& cfg) {
    sub->add_option("--config", g_config_path, "key = value config file (flags override)");
    sub->add_option("--preset", cfg.preset, "model preset: heat1d, coupled2, paper_example");
    sub->add_option("--bc", cfg.bc, "boundary condition: dirichlet or robin");
    sub->add_option("--robin-p", cfg.robin_p, "Robin coefficient p (required with --bc robin)");
    sub->add_option("--nx", cfg.nx, "interior spatial nodes");
    sub->add_option("--nt", cfg.nt, "time steps");
    sub->add_option("--T", cfg.T, "time horizon");
    sub->add_option("--length", cfg.length, "domain length X");
    sub->add_option("--scheme", cfg.scheme, "time scheme: cn or be");
    sub->add_option("--picard-max", cfg.picard_max, "Picard iteration cap");
    sub->add_option("--picard-tol", cfg.picard_tol, "Picard relative tolerance");
    sub->add_option("--seed", cfg.seed, "seed fixing every stochastic choice");
    sub->add_option("--out", cfg.out_dir, "output directory ($CARLAB_OUT_DIR or ./out)");
}

}  // namespace

int main(int argc, char** argv) {
    carlab::RunConfig cfg;

    // The config file seeds the defaults, so it must load before CLI11
    // binds flag values over them: flags override file values.
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") {
            try {
                carlab::load_config_file(cfg, argv[i + 1]);
            } catch (const carlab::ConfigError& e) {
                std::fprintf(stderr, "carlab: %s\n", e.what());
                return carlab::kStatusConfigError;
            }
        }
    }

    CLI::App app{std::string("carlab ") + carlab::kVersion +
                 " -- backward-parabolic stability laboratory"};
    app.require_subcommand(0, 1);
    app.add_option("--config", g_config_path, "key = value config file (flags override)");
    app.add_option("--out", cfg.out_dir, "output directory ($CARLAB_OUT_DIR or ./out)");
    app.add_option("--seed", cfg.seed, "seed fixing every stochastic choice");

    ListFlags lists;

    CLI::App* validate = app.add_subcommand("validate", "check the structural assumptions");
    add_common(validate, cfg);
    validate->add_option("--samples", cfg.samples, "sample count for the assumption checks");

    CLI::App* forward = app.add_subcommand("forward", "solve the forward problem, export CSV");
    add_common(forward, cfg);

    CLI::App* carleman = app.add_subcommand("carleman", "sweep the Carleman budget over (s, lambda)");
    add_common(carleman, cfg);
    carleman->add_option("--s", lists.s_list, "comma-separated s values");
    carleman->add_option("--lambdas", lists.lambda_list, "comma-separated lambda values");

    CLI::App* holder = app.add_subcommand("holder", "twin experiment for the Hoelder rate");
    add_common(holder, cfg);
    holder->add_option("--t0", cfg.t0, "recovery time, 0 < t0 < T");
    holder->add_option("--lambda", cfg.lambda, "rate parameter entering theta");
    holder->add_option("--eps", lists.eps_list, "comma-separated perturbation amplitudes");
    holder->add_option("--family", cfg.family, "perturbation family: single, multi, random");

    CLI::App* lograte = app.add_subcommand("lograte", "twin experiment for the log rate at t0 = 0");
    add_common(lograte, cfg);
    lograte->add_option("--alpha", cfg.alpha, "log-rate exponent in (0, 1)");
    lograte->add_option("--eps", lists.eps_list, "comma-separated perturbation amplitudes");
    lograte->add_option("--family", cfg.family, "perturbation family: single, multi, random");

    CLI::App* reconstruct = app.add_subcommand("reconstruct", "spectral backward reconstruction");
    add_common(reconstruct, cfg);
    reconstruct->add_option("--filter", cfg.filter, "tikhonov or truncation");
    reconstruct->add_option("--alpha", cfg.alpha, "rate exponent for the trend check");
    reconstruct->add_option("--delta", lists.delta_list, "comma-separated noise levels");
    reconstruct->add_option("--noise", cfg.noise, "noise level for a single-shot reconstruction");
    reconstruct->add_option("--noise-mode", cfg.noise_mode, "sine mode carrying the noise");
    reconstruct->add_option("--input", cfg.input, "terminal-snapshot CSV to reconstruct from");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : carlab::kStatusConfigError;
    }

    try {
        if (!lists.s_list.empty()) cfg.s_list = carlab::cli_detail::parse_list(lists.s_list);
        if (!lists.lambda_list.empty())
            cfg.lambda_list = carlab::cli_detail::parse_list(lists.lambda_list);
        if (!lists.eps_list.empty()) cfg.eps_list = carlab::cli_detail::parse_list(lists.eps_list);
        if (!lists.delta_list.empty())
            cfg.delta_list = carlab::cli_detail::parse_list(lists.delta_list);

        for (CLI::App* sub : {validate, forward, carleman, holder, lograte, reconstruct}) {
            if (sub->parsed()) cfg.command = sub->get_name();
        }
        if (cfg.command.empty()) {
            std::fprintf(stderr, "carlab: no command given (subcommand or config file)\n%s\n",
                         app.help().c_str());
            return carlab::kStatusConfigError;
        }
    } catch (const carlab::ConfigError& e) {
        std::fprintf(stderr, "carlab: %s\n", e.what());
        return carlab::kStatusConfigError;
    }

    return carlab::run(cfg);
}
