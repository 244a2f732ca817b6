#include "hmmrates/io.hpp"

#include <fstream>
#include <ostream>

#include "hmmrates/error.hpp"
#include "hmmrates/text.hpp"

namespace hmmrates {

using nlohmann::json;

namespace {

json vector_json(const Vector& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

json matrix_json(const Matrix& m) {
    json out = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(vector_json(m.row(i).transpose()));
    return out;
}

Vector vector_from(const json& doc, const char* name) {
    if (!doc.contains(name) || !doc[name].is_array()) throw ValidationError(std::string("theta: missing array '") + name + "'");
    const json& a = doc[name];
    Vector v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a[i].is_number()) throw ValidationError(std::string("theta: '") + name + "' must hold numbers");
        v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
    }
    return v;
}

}  // namespace

json theta_to_json(const LatentParams& theta) {
    return json{{"mu", vector_json(theta.mu)}, {"chol", matrix_json(theta.chol)}, {"nu0", vector_json(theta.nu0)}};
}

LatentParams theta_from_json(const json& doc) {
    if (!doc.is_object()) throw ValidationError("theta must be a JSON object");
    LatentParams theta;
    theta.mu = vector_from(doc, "mu");
    theta.nu0 = vector_from(doc, "nu0");
    const auto p = theta.mu.size();
    if (!doc.contains("chol") || !doc["chol"].is_array() || doc["chol"].size() != static_cast<std::size_t>(p))
        throw ValidationError("theta: 'chol' must have one row per component");
    theta.chol = Matrix::Zero(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        const json& row = doc["chol"][static_cast<std::size_t>(i)];
        if (!row.is_array() || (row.size() != static_cast<std::size_t>(i + 1) && row.size() != static_cast<std::size_t>(p)))
            throw ValidationError("theta: 'chol' row " + std::to_string(i + 1) + " has the wrong length");
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (!row[j].is_number()) throw ValidationError("theta: 'chol' must hold numbers");
            theta.chol(i, static_cast<Eigen::Index>(j)) = row[j].get<double>();
        }
    }
    const auto problems = validate(theta);
    if (!problems.empty()) {
        std::string msg = "invalid theta:";
        for (const auto& p : problems) msg += " " + p + ";";
        throw ValidationError(msg);
    }
    return theta;
}

LatentParams load_theta_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw UsageError(path + ": " + e.what());
    }
    return theta_from_json(doc);
}

json stats_to_json(const SmoothedStats& stats) {
    return json{{"S_ij", matrix_json(stats.S_ij)}, {"S_i", vector_json(stats.S_i)}, {"E_ij", matrix_json(stats.E_ij)},
                {"E_i", vector_json(stats.E_i)}, {"n", stats.n}, {"N", stats.N}, {"Ntilde", stats.Ntilde}};
}

void write_stats_json(std::ostream& out, const SmoothedStats& stats) { out << stats_to_json(stats).dump(2) << '\n'; }

std::vector<std::string> param_names(int p) {
    std::vector<std::string> names;
    for (int i = 1; i <= p; ++i) names.push_back("mu_" + std::to_string(i));
    for (int i = 1; i <= p; ++i)
        for (int j = 1; j <= i; ++j) names.push_back("A_" + std::to_string(i) + "_" + std::to_string(j));
    for (int i = 1; i <= p; ++i) names.push_back("nu0_" + std::to_string(i));
    return names;
}

std::vector<double> param_values(const LatentParams& theta) {
    std::vector<double> v;
    const int p = theta.dim();
    for (int i = 0; i < p; ++i) v.push_back(theta.mu(i));
    for (int i = 0; i < p; ++i)
        for (int j = 0; j <= i; ++j) v.push_back(theta.chol(i, j));
    for (int i = 0; i < p; ++i) v.push_back(theta.nu0(i));
    return v;
}

void write_yearly_csv(std::ostream& out, const YearlyFit& fit) {
    out << "period,component,value,converged\n";
    for (int t = 0; t < fit.periods(); ++t) {
        const Vector& nu = fit.nu[static_cast<std::size_t>(t)];
        for (Eigen::Index i = 0; i < nu.size(); ++i)
            out << (t + 1) << ',' << (i + 1) << ',' << format_real(nu(i)) << ','
                << (fit.converged[static_cast<std::size_t>(t)] ? "true" : "false") << '\n';
    }
}

void write_filter_csv(std::ostream& out, const FilterOutput& filter) {
    out << "period,component,mean,q05,q50,q95,ess\n";
    const std::vector<double> probs{0.05, 0.5, 0.95};
    for (std::size_t t = 0; t < filter.clouds.size(); ++t) {
        const ParticleCloud& cloud = filter.clouds[t];
        const Vector mean = filter_mean(cloud);
        const Matrix q = filter_quantiles(cloud, probs);
        for (int i = 0; i < cloud.dim(); ++i)
            out << (t + 1) << ',' << (i + 1) << ',' << format_real(mean(i)) << ',' << format_real(q(0, i)) << ','
                << format_real(q(1, i)) << ',' << format_real(q(2, i)) << ',' << format_real(filter.ess[t]) << '\n';
    }
}

void write_trace_csv(std::ostream& out, const EMTrace& trace) {
    out << "iter,q_value,param_name,value,repair\n";
    if (trace.theta.empty()) return;
    const auto names = param_names(trace.theta.front().dim());
    for (std::size_t k = 0; k < trace.theta.size(); ++k) {
        const auto values = param_values(trace.theta[k]);
        const std::string q = format_real(trace.q[k]);
        const char* repair = to_string(trace.repairs[k]);
        for (std::size_t j = 0; j < names.size(); ++j)
            out << (k + 1) << ',' << q << ',' << names[j] << ',' << format_real(values[j]) << ',' << repair << '\n';
    }
}

void write_forecast_csv(std::ostream& out, const RateSurface& surface) {
    out << "horizon,cell_id,prob,quantile_level,value\n";
    for (std::size_t h = 0; h < surface.quantiles.size(); ++h)
        for (std::size_t c = 0; c < surface.cells.size(); ++c) {
            const std::string id = surface.cells[c].label();
            const std::string mean = format_real(surface.mean[h][c]);
            for (std::size_t k = 0; k < surface.probs.size(); ++k)
                out << (h + 1) << ',' << id << ',' << mean << ',' << format_real(surface.probs[k]) << ','
                    << format_real(surface.quantiles[h][c][k]) << '\n';
        }
}

}  // namespace hmmrates
