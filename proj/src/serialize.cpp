#include "dvi/serialize.hpp"

namespace dvi {

std::vector<double> vec_to_std(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vec_from_std(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                             static_cast<Eigen::Index>(v.size()));
}

json to_json(const Grid1D& grid) {
    return json{{"x_min", grid.x_min},
                {"x_max", grid.x_max},
                {"n", grid.n},
                {"h", grid.h}};
}

Grid1D grid_from_json(const json& j) {
    return make_grid(j.at("x_min").get<double>(), j.at("x_max").get<double>(),
                     j.at("n").get<int>());
}

namespace {

json triplets_of(const SparseMat& m) {
    json t = json::array();
    for (int i = 0; i < m.outerSize(); ++i)
        for (SparseMat::InnerIterator it(m, i); it; ++it)
            t.push_back(json::array({it.row(), it.col(), it.value()}));
    return t;
}

SparseMat triplets_to_sparse(const json& t, int n) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(t.size());
    for (const auto& e : t)
        trip.emplace_back(e.at(0).get<int>(), e.at(1).get<int>(),
                          e.at(2).get<double>());
    SparseMat m(n, n);
    m.setFromTriplets(trip.begin(), trip.end());
    m.makeCompressed();
    return m;
}

} // namespace

json to_json(const DiscreteForm& form) {
    json j;
    j["grid"] = to_json(form.grid);
    j["triplets"] = triplets_of(form.A);
    j["mass_diag"] = vec_to_std(form.mass_diag);
    j["alpha"] = form.alpha;
    j["alpha0_est"] = form.alpha0_est;
    if (form.sector_K) j["sector_K"] = *form.sector_K;
    return j;
}

DiscreteForm form_from_json(const json& j) {
    DiscreteForm form;
    form.grid = grid_from_json(j.at("grid"));
    form.mass_diag = vec_from_std(j.at("mass_diag").get<std::vector<double>>());
    form.A = triplets_to_sparse(j.at("triplets"),
                                static_cast<int>(form.mass_diag.size()));
    form.alpha = j.at("alpha").get<double>();
    form.alpha0_est = j.at("alpha0_est").get<double>();
    if (j.contains("sector_K")) form.sector_K = j.at("sector_K").get<double>();
    return form;
}

json to_json(const VISolution& sol) {
    json j;
    j["v"] = vec_to_std(sol.v);
    j["residual"] = vec_to_std(sol.residual);
    j["contact_lower"] = sol.contact_lower;
    j["contact_upper"] = sol.contact_upper;
    j["iterations"] = sol.iterations;
    j["method"] = method_name(sol.method);
    if (sol.witnesses) {
        j["witnesses"] = json{{"w1", vec_to_std(sol.witnesses->first)},
                              {"w2", vec_to_std(sol.witnesses->second)}};
    }
    j["tau_region"] = sol.contact_upper;
    j["sigma_region"] = sol.contact_lower;
    return j;
}

json to_json(const ChainGame& chain) {
    json trip = json::array();
    for (int i = 0; i < chain.size(); ++i)
        for (int j2 = 0; j2 < chain.size(); ++j2)
            if (chain.P(i, j2) != 0.0)
                trip.push_back(json::array({i, j2, chain.P(i, j2)}));
    return json{{"P_triplets", trip},
                {"r", vec_to_std(chain.r)},
                {"g", vec_to_std(chain.g)},
                {"h", vec_to_std(chain.h)},
                {"delta", chain.delta}};
}

ChainGame chain_from_json(const json& j) {
    ChainGame chain;
    chain.r = vec_from_std(j.at("r").get<std::vector<double>>());
    chain.g = vec_from_std(j.at("g").get<std::vector<double>>());
    chain.h = vec_from_std(j.at("h").get<std::vector<double>>());
    chain.delta = j.at("delta").get<double>();
    const int n = static_cast<int>(chain.r.size());
    chain.P = Eigen::MatrixXd::Zero(n, n);
    for (const auto& e : j.at("P_triplets"))
        chain.P(e.at(0).get<int>(), e.at(1).get<int>()) = e.at(2).get<double>();
    chain.validate();
    return chain;
}

json to_json(const PayoffEstimate& est) {
    return json{{"mean", est.mean},
                {"stderr", est.stderr_},
                {"n_paths", est.n_paths},
                {"seed", est.seed},
                {"truncation_fraction", est.truncation_fraction},
                {"truncation_warning", est.truncation_warning}};
}

json to_json(const SaddleReport& report) {
    json sweep = json::array();
    for (const auto& c : report.sweep)
        sweep.push_back(json{{"rule", c.rule},
                             {"side", c.side},
                             {"J", c.J},
                             {"stderr", c.stderr_},
                             {"pass", c.pass}});
    return json{{"equilibrium",
                 json{{"v_x0", report.v_x0},
                      {"J_hat", report.J_hat},
                      {"stderr", report.J_hat_stderr},
                      {"truncation_fraction", report.truncation_fraction},
                      {"pass", report.equilibrium_pass}}},
                {"sweep", sweep},
                {"all_pass", report.all_pass()}};
}

} // namespace dvi
