#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "hmmrates/baseline.hpp"
#include "hmmrates/em.hpp"
#include "hmmrates/forecast.hpp"
#include "hmmrates/latent_rw.hpp"
#include "hmmrates/paris.hpp"
#include "hmmrates/smc.hpp"

namespace hmmrates {

// {"mu": [...], "chol": [[...], ...], "nu0": [...]}; chol rows may be given
// full or as the lower triangle only.
nlohmann::json theta_to_json(const LatentParams& theta);
LatentParams theta_from_json(const nlohmann::json& doc);
LatentParams load_theta_file(const std::string& path);

nlohmann::json stats_to_json(const SmoothedStats& stats);

// Parameter names used in the trace table: mu_i, A_i_j (i >= j), nu0_i.
std::vector<std::string> param_names(int p);
std::vector<double> param_values(const LatentParams& theta);

// period,component,value,converged
void write_yearly_csv(std::ostream& out, const YearlyFit& fit);
// period,component,mean,q05,q50,q95,ess
void write_filter_csv(std::ostream& out, const FilterOutput& filter);
// iter,q_value,param_name,value,repair
void write_trace_csv(std::ostream& out, const EMTrace& trace);
// horizon,cell_id,prob,quantile_level,value
void write_forecast_csv(std::ostream& out, const RateSurface& surface);

}  // namespace hmmrates
