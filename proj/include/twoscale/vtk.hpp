#pragma once

#include <string>
#include <utility>
#include <vector>

#include "twoscale/assembly.hpp"
#include "twoscale/grid.hpp"
#include "twoscale/mapping.hpp"

namespace twoscale {

// Legacy ASCII VTK unstructured grid of the macro mesh with one scalar
// point-data array per named field.
void write_vtk_macro(const Grid& grid,
                     const std::vector<std::pair<std::string, const std::vector<double>*>>& fields,
                     const std::string& path);

// All micro patches in one dataset: patch i is the reference cell pushed
// forward through zeta(x_i, .), scaled by `scale`, and translated to its
// macro node; the scalar array carries the micro coefficients.
void write_vtk_micro(const MicroField& V, const Grid& macro, const Grid& micro,
                     const CompiledDiffeo& map, double scale, const std::string& path);

}  // namespace twoscale
