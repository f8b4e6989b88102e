#include "multimarker/chain_io.hpp"

#include <fstream>
#include <vector>

#include <json.hpp>

#include "multimarker/errors.hpp"

namespace multimarker {

namespace {

using nlohmann::json;

json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd vector_from_json(const json& a) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  return v;
}

void write_doubles(std::ofstream& out, const double* data, std::size_t count) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
}

void read_doubles(std::ifstream& in, double* data, std::size_t count) {
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw IoError("chain file truncated");
}

}  // namespace

void save_chain(const std::string& path, const PosteriorChain& chain) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write chain file: " + path);

  json manifest;
  manifest["format"] = "mmchain";
  manifest["version"] = 1;
  manifest["seed"] = chain.config.seed;
  manifest["config"] = {{"n_iter", chain.config.n_iter},
                        {"n_burn", chain.config.n_burn},
                        {"thin", chain.config.thin},
                        {"mh_step_gamma", chain.config.mh_step_gamma},
                        {"mh_step_eta", chain.config.mh_step_eta},
                        {"adapt_window", chain.config.adapt_window},
                        {"stochastic_allocation", chain.config.stochastic_allocation},
                        {"theta_init_from_dose_variances", chain.config.theta_init_from_dose_variances}};
  manifest["fingerprint"] = chain.dataset_fingerprint;
  manifest["n"] = chain.n;
  manifest["P"] = chain.P;
  manifest["D"] = chain.D;
  manifest["levels"] = vector_to_json(chain.levels);
  manifest["scaled"] = chain.scaled;
  if (chain.scaled) {
    manifest["scaling"] = {{"mean", vector_to_json(chain.scaling.mean)},
                           {"sd", vector_to_json(chain.scaling.sd)},
                           {"shift", vector_to_json(chain.scaling.shift)}};
  }
  manifest["hyp"] = {{"m_alpha", chain.hyp.m_alpha},
                     {"m_beta", chain.hyp.m_beta},
                     {"tau_alpha", chain.hyp.tau_alpha},
                     {"tau_beta", chain.hyp.tau_beta},
                     {"nu_beta1", chain.hyp.nu_beta1},
                     {"nu_beta2", chain.hyp.nu_beta2},
                     {"nu_P1", chain.hyp.nu_P1},
                     {"nu_P2", chain.hyp.nu_P2},
                     {"nu_z1", vector_to_json(chain.hyp.nu_z1)},
                     {"nu_z2", vector_to_json(chain.hyp.nu_z2)},
                     {"m_gamma", vector_to_json(chain.hyp.m_gamma)},
                     {"m_eta", vector_to_json(chain.hyp.m_eta)},
                     {"kappa", chain.hyp.kappa}};
  manifest["n_draws"] = chain.draws.size();
  manifest["acceptance_gamma"] = chain.acceptance_gamma;
  manifest["acceptance_eta"] = chain.acceptance_eta;
  manifest["final_step_gamma"] = chain.final_step_gamma;
  manifest["final_step_eta"] = chain.final_step_eta;

  out << manifest.dump() << '\n';

  std::vector<double> rec;
  for (const ModelState& st : chain.draws) {
    rec.clear();
    auto push_vec = [&rec](const Eigen::VectorXd& v) {
      for (Eigen::Index i = 0; i < v.size(); ++i) rec.push_back(v(i));
    };
    push_vec(st.alpha);
    push_vec(st.beta);
    push_vec(st.sigma2);
    rec.push_back(st.mu_alpha);
    rec.push_back(st.mu_beta);
    rec.push_back(st.sigma_beta2);
    push_vec(st.theta2);
    push_vec(st.gamma);
    push_vec(st.eta);
    push_vec(st.z);
    for (int ci : st.c) rec.push_back(static_cast<double>(ci));
    write_doubles(out, rec.data(), rec.size());
  }
  if (!out) throw IoError("failed while writing chain file: " + path);
}

PosteriorChain load_chain(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open chain file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("chain file has no manifest line: " + path);

  json manifest;
  try {
    manifest = json::parse(line);
  } catch (const json::exception& e) {
    throw IoError("chain manifest is not valid JSON: " + std::string(e.what()));
  }
  if (manifest.value("format", "") != "mmchain" || manifest.value("version", 0) != 1) {
    throw IoError("unsupported chain format/version in " + path);
  }

  PosteriorChain chain;
  chain.config.seed = manifest["seed"].get<std::uint64_t>();
  const json& cfg = manifest["config"];
  chain.config.n_iter = cfg["n_iter"].get<int>();
  chain.config.n_burn = cfg["n_burn"].get<int>();
  chain.config.thin = cfg["thin"].get<int>();
  chain.config.mh_step_gamma = cfg["mh_step_gamma"].get<double>();
  chain.config.mh_step_eta = cfg["mh_step_eta"].get<double>();
  chain.config.adapt_window = cfg["adapt_window"].get<int>();
  chain.config.stochastic_allocation = cfg["stochastic_allocation"].get<bool>();
  chain.config.theta_init_from_dose_variances = cfg["theta_init_from_dose_variances"].get<bool>();
  chain.dataset_fingerprint = manifest["fingerprint"].get<std::string>();
  chain.n = manifest["n"].get<Eigen::Index>();
  chain.P = manifest["P"].get<Eigen::Index>();
  chain.D = manifest["D"].get<Eigen::Index>();
  chain.levels = vector_from_json(manifest["levels"]);
  chain.scaled = manifest["scaled"].get<bool>();
  if (chain.scaled) {
    chain.scaling.mean = vector_from_json(manifest["scaling"]["mean"]);
    chain.scaling.sd = vector_from_json(manifest["scaling"]["sd"]);
    chain.scaling.shift = vector_from_json(manifest["scaling"]["shift"]);
  }
  const json& h = manifest["hyp"];
  chain.hyp.m_alpha = h["m_alpha"].get<double>();
  chain.hyp.m_beta = h["m_beta"].get<double>();
  chain.hyp.tau_alpha = h["tau_alpha"].get<double>();
  chain.hyp.tau_beta = h["tau_beta"].get<double>();
  chain.hyp.nu_beta1 = h["nu_beta1"].get<double>();
  chain.hyp.nu_beta2 = h["nu_beta2"].get<double>();
  chain.hyp.nu_P1 = h["nu_P1"].get<double>();
  chain.hyp.nu_P2 = h["nu_P2"].get<double>();
  chain.hyp.nu_z1 = vector_from_json(h["nu_z1"]);
  chain.hyp.nu_z2 = vector_from_json(h["nu_z2"]);
  chain.hyp.m_gamma = vector_from_json(h["m_gamma"]);
  chain.hyp.m_eta = vector_from_json(h["m_eta"]);
  chain.hyp.kappa = h["kappa"].get<double>();
  chain.acceptance_gamma = manifest["acceptance_gamma"].get<double>();
  chain.acceptance_eta = manifest["acceptance_eta"].get<double>();
  chain.final_step_gamma = manifest["final_step_gamma"].get<double>();
  chain.final_step_eta = manifest["final_step_eta"].get<double>();

  const std::size_t n_draws = manifest["n_draws"].get<std::size_t>();
  const Eigen::Index n = chain.n, P = chain.P, D = chain.D;
  const std::size_t rec_len = static_cast<std::size_t>(3 * P + 3 + D + (D - 1) + P + 2 * n);
  std::vector<double> rec(rec_len);
  chain.draws.reserve(n_draws);
  for (std::size_t t = 0; t < n_draws; ++t) {
    read_doubles(in, rec.data(), rec_len);
    ModelState st;
    std::size_t k = 0;
    auto take_vec = [&rec, &k](Eigen::Index len) {
      Eigen::VectorXd v(len);
      for (Eigen::Index i = 0; i < len; ++i) v(i) = rec[k++];
      return v;
    };
    st.alpha = take_vec(P);
    st.beta = take_vec(P);
    st.sigma2 = take_vec(P);
    st.mu_alpha = rec[k++];
    st.mu_beta = rec[k++];
    st.sigma_beta2 = rec[k++];
    st.theta2 = take_vec(D);
    st.gamma = take_vec(D - 1);
    st.eta = take_vec(P);
    st.z = take_vec(n);
    st.c.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) st.c[static_cast<std::size_t>(i)] = static_cast<int>(rec[k++]);
    st.pi = Eigen::MatrixXd::Constant(n, D, 1.0 / static_cast<double>(D));
    chain.draws.push_back(std::move(st));
  }
  return chain;
}

}  // namespace multimarker
