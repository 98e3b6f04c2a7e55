#pragma once

#include "clifford.hpp"
#include "dirac_verify.hpp"
#include "parallel.hpp"
#include "polytope_smoothing.hpp"
#include "report.hpp"
#include "spinor_fields.hpp"
#include "suites.hpp"
#include "warped_geometry.hpp"

namespace rigidity_lab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace rigidity_lab
