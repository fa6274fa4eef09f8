#include "spinkubo/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "spinkubo/errors.hpp"
#include "spinkubo/parallel.hpp"
#include "spinkubo/spectral.hpp"
#include "spinkubo/torus_oracle.hpp"
#include "spinkubo/transport.hpp"

namespace spinkubo {

namespace {

using nlohmann::json;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::filesystem::path prepare_dir(const RunConfig& cfg, const std::string& override_dir) {
    const std::filesystem::path dir =
        override_dir.empty() ? cfg.output_directory : override_dir;
    std::filesystem::create_directories(dir);
    return dir;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigInvalid("cannot write " + path.string());
    out << text;
}

json params_json(const RunConfig& cfg) {
    return json{{"t", cfg.model.t},
                {"lambda_v", cfg.model.lambda_v},
                {"lambda_so", cfg.model.lambda_so},
                {"lambda_r", cfg.model.lambda_r}};
}

json value_json(const ValueWithBound& v) {
    return json{{"value", v.value}, {"imag", v.imag_part}, {"bound", v.bound}};
}

struct Pipeline {
    HoppingKernel model;
    GapInfo gap;
    FiberField fibers;
    FermiProjectionKernel projection;
};

Pipeline build_pipeline(const RunConfig& cfg) {
    Pipeline p{build_model(cfg), {}, {}, {}};
    const BZGrid grid(cfg.m);
    const BandTable bands = band_spectrum(p.model, grid);
    p.gap = detect_gap(bands, cfg.filled_bands, cfg.mu, cfg.gap_tolerance);
    p.fibers = fermi_fibers(p.model, grid, p.gap, cfg.gap_tolerance);
    p.projection =
        projection_kernel(p.fibers, cfg.effective_radius(), p.gap.mu, cfg.filled_bands);
    return p;
}

void cmd_bands(const RunConfig& cfg, const std::filesystem::path& dir) {
    const HoppingKernel model = build_model(cfg);
    const BZGrid grid(cfg.m);
    const BandTable bands = band_spectrum(model, grid);
    std::string csv = "k1,k2";
    for (int b = 1; b <= bands.n_bands; ++b) csv += ",e" + std::to_string(b);
    csv += "\n";
    for (int j = 0; j < grid.m; ++j)
        for (int i = 0; i < grid.m; ++i) {
            csv += fmt(grid.k1(i)) + "," + fmt(grid.k2(j));
            for (int b = 0; b < bands.n_bands; ++b)
                csv += "," + fmt(bands.energy(grid.index(i, j), b));
            csv += "\n";
        }
    write_text(dir / "bands.csv", csv);
}

void cmd_gap(const RunConfig& cfg, const std::filesystem::path& dir) {
    const HoppingKernel model = build_model(cfg);
    const BZGrid grid(cfg.m);
    const GapInfo gap =
        detect_gap(band_spectrum(model, grid), cfg.filled_bands, cfg.mu, cfg.gap_tolerance);
    const json j{{"a", gap.a},
                 {"b", gap.b},
                 {"mu", gap.mu},
                 {"width", gap.width()},
                 {"filled_bands", gap.filled_bands}};
    write_text(dir / "gap.json", j.dump(2) + "\n");
}

void cmd_projector(const RunConfig& cfg, const std::filesystem::path& dir) {
    const Pipeline p = build_pipeline(cfg);
    const auto& k = p.projection.kernel;
    json meta{{"M", p.projection.m},
              {"R", p.projection.radius()},
              {"mu", p.projection.mu},
              {"filled_bands", p.projection.filled_bands},
              {"tail_estimate", p.projection.tail_estimate},
              {"decay_fit",
               {{"C", p.projection.fit.c},
                {"zeta", p.projection.fit.zeta},
                {"r_squared", p.projection.fit.r_squared},
                {"degenerate", p.projection.fit.degenerate}}}};
    write_text(dir / "projector.json", meta.dump(2) + "\n");

    json blocks = json::array();
    for (int n2 = -k.radius(); n2 <= k.radius(); ++n2)
        for (int n1 = -k.radius(); n1 <= k.radius(); ++n1) {
            const Mat b = k.block({n1, n2});
            if (b.norm() < 1e-15) continue;
            json re = json::array(), im = json::array();
            for (int r = 0; r < k.dim(); ++r) {
                json rr = json::array(), ri = json::array();
                for (int c = 0; c < k.dim(); ++c) {
                    rr.push_back(b(r, c).real());
                    ri.push_back(b(r, c).imag());
                }
                re.push_back(rr);
                im.push_back(ri);
            }
            blocks.push_back(json{{"n1", n1}, {"n2", n2}, {"re", re}, {"im", im}});
        }
    write_text(dir / "projector_kernel.json", blocks.dump() + "\n");
}

void cmd_sigma(const RunConfig& cfg, const std::filesystem::path& dir) {
    const Pipeline p = build_pipeline(cfg);
    const ValueWithBound s = sigma_K(p.projection);
    const ValueWithBound t = torque_response(p.projection);
    json j{{"sigma_K", value_json(s)},
           {"torque", value_json(t)},
           {"mu", p.gap.mu},
           {"gap", {{"a", p.gap.a}, {"b", p.gap.b}}},
           {"M", cfg.m},
           {"R", cfg.effective_radius()},
           {"params", params_json(cfg)}};
    write_text(dir / "sigma.json", j.dump(2) + "\n");
}

void cmd_torque(const RunConfig& cfg, const std::filesystem::path& dir) {
    const Pipeline p = build_pipeline(cfg);
    const ValueWithBound t = torque_response(p.projection);
    json j{{"torque", value_json(t)},
           {"M", cfg.m},
           {"R", cfg.effective_radius()},
           {"params", params_json(cfg)}};
    write_text(dir / "torque.json", j.dump(2) + "\n");
}

void cmd_conductance(const RunConfig& cfg, const std::filesystem::path& dir) {
    const Pipeline p = build_pipeline(cfg);
    TransportReport report;
    report.switch1_name = cfg.switch1;
    report.switch2_name = cfg.switch2;
    report.params = cfg.model;
    report.m = cfg.m;
    report.radius = cfg.effective_radius();
    report.sigma_k = sigma_K(p.projection);
    report.torque_tau = torque_response(p.projection);
    report.conductance =
        conductance_GK(p.projection, make_switch(cfg.switch1, 1),
                       make_switch(cfg.switch2, 2), cfg.l_max, cfg.transverse_cutoff);

    std::string csv = "L,GK_re,GK_im,tail_bound\n";
    for (const auto& s : report.conductance.series.samples)
        csv += std::to_string(s.l) + "," + fmt(s.value.real()) + "," +
               fmt(s.value.imag()) + "," + fmt(s.bound) + "\n";
    write_text(dir / "conductance.csv", csv);
    json j{{"G_K",
            {{"value", report.conductance.value},
             {"imag", report.conductance.imag_part},
             {"bound", report.conductance.bound},
             {"verdict", TraceSeries::verdict_name(report.conductance.series.verdict)}}},
           {"sigma_K", value_json(report.sigma_k)},
           {"torque", value_json(report.torque_tau)},
           {"switch1", report.switch1_name},
           {"switch2", report.switch2_name},
           {"L_max", cfg.l_max},
           {"M", report.m},
           {"R", report.radius},
           {"params", params_json(cfg)}};
    write_text(dir / "conductance.json", j.dump(2) + "\n");
}

void cmd_chern(const RunConfig& cfg, const std::filesystem::path& dir) {
    const Pipeline p = build_pipeline(cfg);
    const InvariantReport inv = compute_invariants(p.model, p.fibers);
    json j{{"chern_total", inv.chern_total},
           {"chern_total_residual", inv.chern_total_residual},
           {"spin_commuting", inv.spin_commuting},
           {"spin_commuting_norm", inv.spin_commuting_norm},
           {"params", params_json(cfg)}};
    if (inv.spin_commuting) {
        j["chern_up"] = inv.chern_up;
        j["chern_down"] = inv.chern_down;
        j["chern_spin_residual"] = inv.chern_spin_residual;
    }
    write_text(dir / "chern.json", j.dump(2) + "\n");
}

void cmd_decomposition(const RunConfig& cfg, const std::filesystem::path& dir) {
    const Pipeline p = build_pipeline(cfg);
    const SwitchFunction s2 = make_switch(cfg.switch2, 2);
    const GKDecomposition dec =
        GK_decomposition(p.projection, cfg.ramp_halfwidth, s2, cfg.l_max);
    const ValueWithBound s = sigma_K(p.projection);
    std::string csv = "L,Gb_re,Gb_im,tail_bound\n";
    for (const auto& smp : dec.g_b_series.samples)
        csv += std::to_string(smp.l) + "," + fmt(smp.value.real()) + "," +
               fmt(smp.value.imag()) + "," + fmt(smp.bound) + "\n";
    write_text(dir / "gb_series.csv", csv);
    json j{{"G_a_over_l", dec.g_a_over_l},
           {"sigma_K", s.value},
           {"difference", dec.g_a_over_l - s.value},
           {"bound", dec.bound},
           {"l", cfg.ramp_halfwidth},
           {"params", params_json(cfg)}};
    write_text(dir / "decomposition.json", j.dump(2) + "\n");
}

void cmd_oracle_check(const RunConfig& cfg, const std::filesystem::path& dir) {
    const HoppingKernel model = build_model(cfg);
    const int l = cfg.torus_l;
    // Duality-matched pipeline: the M = L grid and the full torus window.
    const FermiProjectionKernel pipeline =
        fermi_projection(model, l, (l - 1) / 2, cfg.filled_bands, cfg.mu);
    const TorusSystem torus = build_torus(model, l);
    const Mat dense = torus_fermi_projection(torus, pipeline.mu);

    // Spectral duality: torus spectrum vs the union over the M = L grid.
    const BZGrid grid(l);
    const BandTable bands = band_spectrum(model, grid);
    std::vector<double> grid_evals(bands.energies.begin(), bands.energies.end());
    std::sort(grid_evals.begin(), grid_evals.end());
    std::vector<double> torus_evals = torus_spectrum(torus);
    double spectral_residual = 0.0;
    for (size_t i = 0; i < torus_evals.size(); ++i)
        spectral_residual =
            std::max(spectral_residual, std::abs(torus_evals[i] - grid_evals[i]));

    double block_diff = 0.0;
    for (int n2 = -torus.half(); n2 <= torus.half(); ++n2)
        for (int n1 = -torus.half(); n1 <= torus.half(); ++n1)
            block_diff = std::max(
                block_diff, operator_norm(torus_kernel_block(torus, dense, {n1, n2}) -
                                          pipeline.kernel.block({n1, n2})));

    const double sigma_torus = torus_sigma_K(torus, dense);
    const ValueWithBound sigma_pipeline = sigma_K(pipeline);

    json j{{"L", l},
           {"sigma_pipeline", sigma_pipeline.value},
           {"sigma_torus", sigma_torus},
           {"sigma_diff", std::abs(sigma_pipeline.value - sigma_torus)},
           {"projector_block_max_diff", block_diff},
           {"spectral_duality_residual", spectral_residual},
           {"params", params_json(cfg)}};
    write_text(dir / "oracle.json", j.dump(2) + "\n");
}

void cmd_sweep(const RunConfig& cfg, const std::filesystem::path& dir) {
    if (cfg.sweep_parameter.empty())
        throw ConfigInvalid("sweep needs a [sweep] section with a parameter");
    auto set_param = [](KaneMeleParams& p, const std::string& name, double v) {
        if (name == "t") p.t = v;
        else if (name == "lambda_v") p.lambda_v = v;
        else if (name == "lambda_so") p.lambda_so = v;
        else if (name == "lambda_r") p.lambda_r = v;
        else throw ConfigInvalid("unknown sweep parameter: " + name);
    };

    struct Point {
        double v1 = 0.0, v2 = 0.0;
        bool two = false;
    };
    std::vector<Point> points;
    const bool two = !cfg.sweep_parameter2.empty();
    for (int i = 0; i < cfg.sweep_steps; ++i) {
        const double v1 = cfg.sweep_from + (cfg.sweep_to - cfg.sweep_from) * i /
                                               (cfg.sweep_steps - 1);
        if (!two) {
            points.push_back({v1, 0.0, false});
        } else {
            for (int k = 0; k < cfg.sweep_steps2; ++k) {
                const double v2 = cfg.sweep_from2 + (cfg.sweep_to2 - cfg.sweep_from2) *
                                                        k / (cfg.sweep_steps2 - 1);
                points.push_back({v1, v2, true});
            }
        }
    }

    std::vector<std::string> rows(points.size());
    parallel_for(static_cast<int>(points.size()), [&](int idx) {
        const Point& pt = points[idx];
        RunConfig local = cfg;
        set_param(local.model, cfg.sweep_parameter, pt.v1);
        if (pt.two) set_param(local.model, cfg.sweep_parameter2, pt.v2);
        std::string row = fmt(pt.v1);
        if (pt.two) row += "," + fmt(pt.v2);
        try {
            const Pipeline p = build_pipeline(local);
            const ValueWithBound s = sigma_K(p.projection);
            const ValueWithBound t = torque_response(p.projection);
            const InvariantReport inv = compute_invariants(p.model, p.fibers);
            row += "," + fmt(p.gap.a) + "," + fmt(p.gap.b) + "," + fmt(p.gap.width());
            row += "," + fmt(s.value) + "," + fmt(s.bound);
            row += "," + fmt(t.value) + "," + fmt(t.bound);
            if (inv.spin_commuting)
                row += "," + std::to_string(inv.chern_up) + "," +
                       std::to_string(inv.chern_down);
            else
                row += ",,";
            row += ",ok";
        } catch (const NumericalError&) {
            row += ",,,,,,,,,,gap_closed";
        }
        rows[idx] = row;
    });

    std::string csv = cfg.sweep_parameter;
    if (two) csv += "," + cfg.sweep_parameter2;
    csv += ",a,b,gap_width,sigma_K,sigma_bound,torque,torque_bound,chern_up,chern_down,status\n";
    for (const auto& r : rows) csv += r + "\n";
    write_text(dir / "sweep.csv", csv);
}

}  // namespace

int run_subcommand(const std::string& name, const RunConfig& config,
                   const std::string& output_dir_override) {
    const std::filesystem::path dir = prepare_dir(config, output_dir_override);
    if (name == "bands") cmd_bands(config, dir);
    else if (name == "gap") cmd_gap(config, dir);
    else if (name == "projector") cmd_projector(config, dir);
    else if (name == "sigma") cmd_sigma(config, dir);
    else if (name == "torque") cmd_torque(config, dir);
    else if (name == "conductance") cmd_conductance(config, dir);
    else if (name == "chern") cmd_chern(config, dir);
    else if (name == "decomposition") cmd_decomposition(config, dir);
    else if (name == "oracle-check") cmd_oracle_check(config, dir);
    else if (name == "sweep") cmd_sweep(config, dir);
    else throw ConfigInvalid("unknown subcommand: " + name);
    return 0;
}

}  // namespace spinkubo
