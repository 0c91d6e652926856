#pragma once

// CSV tables and the SVG ratio plot emitted by the command-line tool.

#include <optional>
#include <string>
#include <vector>

#include "chaosx/asympt.hpp"
#include "chaosx/constants.hpp"
#include "chaosx/mc.hpp"

namespace chaosx::report {

inline constexpr const char* kConstantsHeader =
    "alpha,a,f,domain,S,delta,n_rep,estimate,std_error,extrapolated";
inline constexpr const char* kAsymptoticHeader =
    "u,value,regime,alpha_star,beta_star,H_alpha,P_const,integral,h0";
inline constexpr const char* kValidateHeader =
    "u,p_hat,ci_low,ci_high,n,hits,grid_step,asympt,ratio,regime,seed";
inline constexpr const char* kTailHeader = "x,tail,pdf,status";

// Shortest round-trip decimal; "nan", "inf", "-inf" for non-finite values.
std::string number(double v);
std::string number(const std::optional<double>& v);  // empty when absent

// Each returns one CSV line without the trailing newline.
std::string constants_row(const constants::ConstantKey& key, const constants::ConstantEstimate& e);
std::string asymptotic_row(const asympt::AsymptoticResult& r);
std::string validate_row(const mc::ComparisonRow& r);
// tail/pdf empty and status "invalid" below the validity floor.
std::string tail_row(double x, std::optional<double> tail, std::optional<double> pdf);

// MC / asymptotic ratio against u, with Wilson-interval whiskers and the
// reference line y = 1.
std::string ratio_svg(const std::vector<mc::ComparisonRow>& rows, bool log_y = false);

}  // namespace chaosx::report
