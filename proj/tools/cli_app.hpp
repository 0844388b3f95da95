#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "thermocurv/flags.hpp"
#include "thermocurv/state.hpp"

namespace thermocurv {
class PotentialSpec;
}

namespace thermocurv::cli {

/// One evaluated state point, in the column order of the CSV output.
struct PointRow {
    StatePoint p;
    double t, y;
    double m_ss, m_sx, m_xx;
    double det_gm, det_gf;
    double r_m, r_f;
    double c_x, c_y, alpha, kappa_t, kappa_s, gamma;
    Flags flags;
};

/// Evaluates everything reported per point. Never throws: failures are
/// recorded as flags and the affected fields are NaN.
PointRow evaluate_row(const PotentialSpec& spec, StatePoint p, Tolerances tol);

const std::vector<std::string>& column_names();

/// %.17g text for a double; round-trips exactly.
std::string format_number17(double v);

/// Entry point. `args` excludes the program name. Returns the exit code:
/// 0 success, 1 check failure, 2 usage, parse or domain error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace thermocurv::cli
