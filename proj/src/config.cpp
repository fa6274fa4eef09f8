#include "spinkubo/config.hpp"

#include <fstream>
#include <sstream>

#include "spinkubo/errors.hpp"

namespace spinkubo {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double to_double(const std::string& v, const std::string& key) {
    try {
        size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return x;
    } catch (...) {
        throw ConfigInvalid("invalid number for " + key + ": '" + v + "'");
    }
}

int to_int(const std::string& v, const std::string& key) {
    try {
        size_t pos = 0;
        const int x = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return x;
    } catch (...) {
        throw ConfigInvalid("invalid integer for " + key + ": '" + v + "'");
    }
}

}  // namespace

void RunConfig::validate() const {
    if (m < 2) throw ConfigInvalid("M must be >= 2");
    const int r = effective_radius();
    if (r < 1) throw ConfigInvalid("truncation radius must be positive");
    if (m <= 2 * r) throw ConfigInvalid("need M > 2R (aliasing guard)");
    if (l_max < 1 || l_max % 2 == 0) throw ConfigInvalid("L_max must be odd");
    if (transverse_cutoff < 1) throw ConfigInvalid("transverse_cutoff must be positive");
    if (filled_bands < 1) throw ConfigInvalid("filled_bands must be positive");
    if (gap_tolerance <= 0) throw ConfigInvalid("gap_tolerance must be positive");
    if (torus_l < 3 || torus_l % 2 == 0) throw ConfigInvalid("torus_l must be odd >= 3");
    if (ramp_halfwidth < 1) throw ConfigInvalid("ramp_halfwidth must be positive");
    if (switch1 != "sharp" && switch1 != "ramp")
        throw ConfigInvalid("switch profile must be sharp or ramp");
    if (switch2 != "sharp" && switch2 != "ramp")
        throw ConfigInvalid("switch profile must be sharp or ramp");
    if (!sweep_parameter.empty() && sweep_steps < 2)
        throw ConfigInvalid("sweep needs steps >= 2");
    if (!sweep_parameter2.empty() && sweep_steps2 < 2)
        throw ConfigInvalid("sweep needs steps2 >= 2");
}

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigInvalid("malformed section header at line " +
                                    std::to_string(lineno));
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigInvalid("expected key = value at line " + std::to_string(lineno));
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        if (section == "model") {
            if (key == "t") cfg.model.t = to_double(value, key);
            else if (key == "lambda_v") cfg.model.lambda_v = to_double(value, key);
            else if (key == "lambda_so") cfg.model.lambda_so = to_double(value, key);
            else if (key == "lambda_r") cfg.model.lambda_r = to_double(value, key);
            else if (key == "n_orbitals") cfg.n_orbitals = to_int(value, key);
            else if (key == "hopping") {
                std::istringstream hs(value);
                GenericHopping h;
                if (!(hs >> h.offset.n1 >> h.offset.n2 >> h.row >> h.col >> h.re >> h.im))
                    throw ConfigInvalid("hopping needs: n1 n2 row col re im (line " +
                                        std::to_string(lineno) + ")");
                std::string rest;
                if (hs >> rest)
                    throw ConfigInvalid("trailing tokens in hopping at line " +
                                        std::to_string(lineno));
                cfg.generic_hoppings.push_back(h);
            } else
                throw ConfigInvalid("unknown [model] key: " + key);
        } else if (section == "numerics") {
            if (key == "M") cfg.m = to_int(value, key);
            else if (key == "R") cfg.radius = to_int(value, key);
            else if (key == "L_max") cfg.l_max = to_int(value, key);
            else if (key == "transverse_cutoff") cfg.transverse_cutoff = to_int(value, key);
            else if (key == "filled_bands") cfg.filled_bands = to_int(value, key);
            else if (key == "mu") cfg.mu = to_double(value, key);
            else if (key == "gap_tolerance") cfg.gap_tolerance = to_double(value, key);
            else if (key == "torus_L") cfg.torus_l = to_int(value, key);
            else
                throw ConfigInvalid("unknown [numerics] key: " + key);
        } else if (section == "switches") {
            if (key == "lambda1") cfg.switch1 = value;
            else if (key == "lambda2") cfg.switch2 = value;
            else if (key == "ramp_halfwidth") cfg.ramp_halfwidth = to_int(value, key);
            else
                throw ConfigInvalid("unknown [switches] key: " + key);
        } else if (section == "sweep") {
            if (key == "parameter") cfg.sweep_parameter = value;
            else if (key == "from") cfg.sweep_from = to_double(value, key);
            else if (key == "to") cfg.sweep_to = to_double(value, key);
            else if (key == "steps") cfg.sweep_steps = to_int(value, key);
            else if (key == "parameter2") cfg.sweep_parameter2 = value;
            else if (key == "from2") cfg.sweep_from2 = to_double(value, key);
            else if (key == "to2") cfg.sweep_to2 = to_double(value, key);
            else if (key == "steps2") cfg.sweep_steps2 = to_int(value, key);
            else
                throw ConfigInvalid("unknown [sweep] key: " + key);
        } else if (section == "output") {
            if (key == "directory") cfg.output_directory = value;
            else
                throw ConfigInvalid("unknown [output] key: " + key);
        } else {
            throw ConfigInvalid("unknown section [" + section + "]");
        }
    }
    cfg.validate();
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigInvalid("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

HoppingKernel build_model(const RunConfig& config) {
    if (config.generic_hoppings.empty()) return build_kane_mele(config.model);
    const InternalBasis basis{config.n_orbitals};
    HoppingKernel kernel(basis);
    const int d = basis.dim();
    for (const auto& h : config.generic_hoppings) {
        if (h.row < 0 || h.row >= d || h.col < 0 || h.col >= d)
            throw ConfigInvalid("hopping row/col outside internal dimension");
        Mat m = Mat::Zero(d, d);
        m(h.row, h.col) = Complex(h.re, h.im);
        kernel.add(h.offset, m);
    }
    try {
        kernel.validate();
    } catch (const std::exception& e) {
        throw ConfigInvalid(std::string("generic hoppings are not hermitian: ") +
                            e.what());
    }
    return kernel;
}

SwitchFunction make_switch(const std::string& name, int axis) {
    if (name == "sharp") return SwitchFunction::sharp(axis);
    if (name == "ramp") return SwitchFunction::linear_ramp(axis);
    throw ConfigInvalid("unknown switch profile: " + name);
}

}  // namespace spinkubo
