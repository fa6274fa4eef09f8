#pragma once

#include <optional>
#include <string>

#include "spinkubo/lattice_model.hpp"

namespace spinkubo {

// One generic hopping entry: H_{0,(n1,n2)}[row,col] += re + i im. The supplied
// set must be hermitian as a whole (partners at -offset included).
struct GenericHopping {
    Cell offset;
    int row = 0;
    int col = 0;
    double re = 0.0;
    double im = 0.0;
};

struct RunConfig {
    // [model]
    KaneMeleParams model;
    std::vector<GenericHopping> generic_hoppings;  // used when non-empty
    int n_orbitals = 2;

    // [numerics]
    int m = 24;
    int radius = -1;  // -1: M/2 - 1
    int l_max = 21;
    int transverse_cutoff = 1000;
    int filled_bands = 2;
    std::optional<double> mu;
    double gap_tolerance = 1e-8;
    int torus_l = 15;

    // [switches]
    std::string switch1 = "sharp";  // sharp | ramp
    std::string switch2 = "sharp";
    int ramp_halfwidth = 7;

    // [sweep]
    std::string sweep_parameter;
    double sweep_from = 0.0;
    double sweep_to = 0.0;
    int sweep_steps = 0;
    std::string sweep_parameter2;
    double sweep_from2 = 0.0;
    double sweep_to2 = 0.0;
    int sweep_steps2 = 0;

    // [output]
    std::string output_directory = "out";

    int effective_radius() const { return radius > 0 ? radius : m / 2 - 1; }
    void validate() const;
};

RunConfig parse_config_file(const std::string& path);
RunConfig parse_config_text(const std::string& text);

// The configured model: Kane-Mele parameters or explicit hopping blocks.
HoppingKernel build_model(const RunConfig& config);

SwitchFunction make_switch(const std::string& name, int axis);

}  // namespace spinkubo
