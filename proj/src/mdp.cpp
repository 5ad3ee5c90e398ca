#include "gqh/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace gqh {

namespace {

using nlohmann::json;

std::size_t sample_index(std::span<const double> probs, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last = i;
    if (u < acc) return i;
  }
  return last;
}

double sample_reward(std::span<const Atom> atoms, Rng& rng) {
  if (atoms.size() == 1) return atoms[0].value;
  std::vector<double> p(atoms.size());
  for (std::size_t i = 0; i < atoms.size(); ++i) p[i] = atoms[i].prob;
  return atoms[sample_index(p, rng)].value;
}

struct Enumerator {
  const MdpModel& mdp;
  std::span<const std::size_t> policy;
  std::size_t horizon;
  std::size_t max_paths;
  std::vector<Atom> out;
  bool truncated = false;

  void visit(std::size_t s, std::size_t a, std::size_t depth, double ret, double prob, double scale) {
    for (const Atom& r : mdp.reward[s][a]) {
      if (r.prob <= 0.0) continue;
      const double g = ret + scale * r.value;
      const auto& row = mdp.transition[s][a];
      for (std::size_t next = 0; next < row.size(); ++next) {
        const double p = prob * r.prob * row[next];
        if (row[next] <= 0.0) continue;
        if (mdp.terminal[next] || depth + 1 >= horizon) {
          if (!mdp.terminal[next]) truncated = true;
          if (out.size() >= max_paths) {
            throw std::runtime_error("oracle_return_distribution: enumeration budget exceeded");
          }
          out.push_back({g, p});
        } else {
          visit(next, policy[next], depth + 1, g, p, scale * mdp.discount);
        }
      }
    }
  }
};

std::vector<Atom> merge_atoms(std::vector<Atom> atoms) {
  std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.value < b.value; });
  std::vector<Atom> merged;
  for (const Atom& a : atoms) {
    if (!merged.empty() &&
        std::fabs(a.value - merged.back().value) <= 1e-9 * std::max(1.0, std::fabs(a.value))) {
      merged.back().prob += a.prob;
    } else {
      merged.push_back(a);
    }
  }
  return merged;
}

}  // namespace

void MdpModel::validate() const {
  if (n_states == 0 || n_actions == 0) throw std::invalid_argument("MdpModel: empty state or action set");
  if (transition.size() != n_states || reward.size() != n_states || terminal.size() != n_states) {
    throw std::invalid_argument("MdpModel: table sizes do not match n_states");
  }
  if (start_state >= n_states) throw std::invalid_argument("MdpModel: start state out of range");
  if (!(discount > 0.0 && discount <= 1.0)) throw std::invalid_argument("MdpModel: discount must lie in (0, 1]");
  for (std::size_t s = 0; s < n_states; ++s) {
    if (transition[s].size() != n_actions || reward[s].size() != n_actions) {
      throw std::invalid_argument("MdpModel: state " + std::to_string(s) + " has wrong action count");
    }
    if (terminal[s]) continue;
    for (std::size_t a = 0; a < n_actions; ++a) {
      const auto& row = transition[s][a];
      if (row.size() != n_states) {
        throw std::invalid_argument("MdpModel: transition row (" + std::to_string(s) + "," + std::to_string(a) +
                                    ") has wrong length");
      }
      double sum = 0.0;
      for (double p : row) {
        if (!(p >= 0.0)) throw std::invalid_argument("MdpModel: negative transition probability");
        sum += p;
      }
      if (std::fabs(sum - 1.0) > 1e-12) {
        throw std::invalid_argument("MdpModel: transition row (" + std::to_string(s) + "," + std::to_string(a) +
                                    ") does not sum to 1");
      }
      const auto& support = reward[s][a];
      if (support.empty()) throw std::invalid_argument("MdpModel: empty reward support");
      double rsum = 0.0;
      for (const Atom& at : support) {
        if (!std::isfinite(at.value) || !(at.prob >= 0.0)) {
          throw std::invalid_argument("MdpModel: invalid reward atom");
        }
        rsum += at.prob;
      }
      if (std::fabs(rsum - 1.0) > 1e-12) throw std::invalid_argument("MdpModel: reward support does not sum to 1");
    }
  }
}

MdpModel chain_mdp(std::size_t length, std::vector<Atom> noise, double discount) {
  if (length < 2) throw std::invalid_argument("chain_mdp: length must be >= 2");
  MdpModel m;
  m.n_states = length + 1;
  m.n_actions = 2;
  m.discount = discount;
  m.start_state = 0;
  m.terminal.assign(m.n_states, false);
  m.terminal[length] = true;
  m.transition.assign(m.n_states, std::vector<std::vector<double>>(2, std::vector<double>(m.n_states, 0.0)));
  m.reward.assign(m.n_states, std::vector<std::vector<Atom>>(2, std::vector<Atom>{{0.0, 1.0}}));
  for (std::size_t s = 0; s <= length; ++s) {
    if (s < length) {
      m.transition[s][0][s + 1] = 1.0;
      m.reward[s][0] = noise;
    } else {
      m.transition[s][0][s] = 1.0;
    }
    m.transition[s][1][s] = 1.0;
  }
  m.validate();
  return m;
}

std::vector<Atom> binomial_gaussian_support(double mean, double std, std::size_t atoms) {
  if (atoms < 2 || !(std > 0.0)) throw std::invalid_argument("binomial_gaussian_support: need >= 2 atoms and std > 0");
  const std::size_t n = atoms - 1;
  const double step = 2.0 * std / std::sqrt(static_cast<double>(n));
  std::vector<Atom> out(atoms);
  double coef = 1.0;  // C(n, k)
  const double scale = std::ldexp(1.0, -static_cast<int>(n));
  for (std::size_t k = 0; k <= n; ++k) {
    out[k].value = mean + (static_cast<double>(k) - 0.5 * static_cast<double>(n)) * step;
    out[k].prob = coef * scale;
    coef = coef * static_cast<double>(n - k) / static_cast<double>(k + 1);
  }
  return out;
}

OracleDistribution oracle_return_distribution(const MdpModel& mdp, std::span<const std::size_t> policy,
                                              std::size_t start, std::size_t horizon, std::size_t max_paths) {
  if (policy.size() != mdp.n_states) throw std::invalid_argument("oracle: policy must cover every state");
  if (start >= mdp.n_states) throw std::invalid_argument("oracle: start state out of range");
  return oracle_return_distribution(mdp, policy, start, policy[start], horizon, max_paths);
}

OracleDistribution oracle_return_distribution(const MdpModel& mdp, std::span<const std::size_t> policy,
                                              std::size_t start, std::size_t first_action, std::size_t horizon,
                                              std::size_t max_paths) {
  mdp.validate();
  if (policy.size() != mdp.n_states) throw std::invalid_argument("oracle: policy must cover every state");
  for (std::size_t a : policy) {
    if (a >= mdp.n_actions) throw std::invalid_argument("oracle: policy action out of range");
  }
  if (start >= mdp.n_states || first_action >= mdp.n_actions) {
    throw std::invalid_argument("oracle: start state or action out of range");
  }
  if (horizon == 0) throw std::invalid_argument("oracle: horizon must be >= 1");

  OracleDistribution result;
  if (mdp.terminal[start]) {
    result.atoms = {{0.0, 1.0}};
    result.paths = 1;
    return result;
  }
  Enumerator e{mdp, policy, horizon, max_paths, {}, false};
  e.visit(start, first_action, 0, 0.0, 1.0, 1.0);
  result.paths = e.out.size();
  result.atoms = merge_atoms(std::move(e.out));
  if (e.truncated) {
    double r_max = 0.0;
    for (const auto& per_state : mdp.reward) {
      for (const auto& support : per_state) {
        for (const Atom& a : support) r_max = std::max(r_max, std::fabs(a.value));
      }
    }
    const double tail = std::pow(mdp.discount, static_cast<double>(horizon));
    result.truncation_bound = mdp.discount < 1.0 ? tail * r_max / (1.0 - mdp.discount)
                                                 : std::numeric_limits<double>::infinity();
  }
  return result;
}

std::vector<double> midpoint_quantiles(std::span<const Atom> sorted_atoms, std::size_t n) {
  if (sorted_atoms.empty() || n == 0) throw std::invalid_argument("midpoint_quantiles: empty input");
  std::vector<double> q(n);
  std::size_t k = 0;
  double cdf = sorted_atoms[0].prob;
  for (std::size_t i = 0; i < n; ++i) {
    const double tau = (2.0 * static_cast<double>(i) + 1.0) / (2.0 * static_cast<double>(n));
    while (cdf < tau && k + 1 < sorted_atoms.size()) {
      ++k;
      cdf += sorted_atoms[k].prob;
    }
    q[i] = sorted_atoms[k].value;
  }
  return q;
}

MdpModel parse_mdp(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("mdp: malformed JSON: ") + e.what());
  }
  auto field = [&](const json& obj, const char* key, const std::string& where) -> const json& {
    if (!obj.is_object() || !obj.contains(key)) throw std::invalid_argument("mdp: missing field " + where + key);
    return obj.at(key);
  };
  MdpModel m;
  try {
    m.n_states = field(doc, "states", "").get<std::size_t>();
    m.n_actions = field(doc, "actions", "").get<std::size_t>();
    m.discount = doc.value("discount", 1.0);
    m.start_state = doc.value("start", std::size_t{0});
    if (m.n_states == 0 || m.n_actions == 0) throw std::invalid_argument("mdp: states and actions must be >= 1");
    m.terminal.assign(m.n_states, false);
    for (const auto& t : doc.value("terminal", json::array())) {
      const auto s = t.get<std::size_t>();
      if (s >= m.n_states) throw std::invalid_argument("mdp: terminal state out of range");
      m.terminal[s] = true;
    }
    m.transition.assign(m.n_states,
                        std::vector<std::vector<double>>(m.n_actions, std::vector<double>(m.n_states, 0.0)));
    m.reward.assign(m.n_states, std::vector<std::vector<Atom>>(m.n_actions, std::vector<Atom>{{0.0, 1.0}}));
    for (std::size_t s = 0; s < m.n_states; ++s) {
      if (!m.terminal[s]) continue;
      for (std::size_t a = 0; a < m.n_actions; ++a) m.transition[s][a][s] = 1.0;
    }
    std::vector<std::vector<bool>> seen(m.n_states, std::vector<bool>(m.n_actions, false));
    const auto& rows = field(doc, "transitions", "");
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::string where = "transitions[" + std::to_string(i) + "].";
      const auto s = field(rows[i], "state", where).get<std::size_t>();
      const auto a = field(rows[i], "action", where).get<std::size_t>();
      if (s >= m.n_states || a >= m.n_actions) throw std::invalid_argument("mdp: " + where + " index out of range");
      auto next = field(rows[i], "next", where).get<std::vector<double>>();
      if (next.size() != m.n_states) {
        throw std::invalid_argument("mdp: " + where + "next must have one entry per state");
      }
      m.transition[s][a] = std::move(next);
      seen[s][a] = true;
    }
    for (std::size_t s = 0; s < m.n_states; ++s) {
      for (std::size_t a = 0; a < m.n_actions; ++a) {
        if (!m.terminal[s] && !seen[s][a]) {
          throw std::invalid_argument("mdp: no transition row for state " + std::to_string(s) + " action " +
                                      std::to_string(a));
        }
      }
    }
    if (doc.contains("rewards")) {
      const auto& rs = doc.at("rewards");
      for (std::size_t i = 0; i < rs.size(); ++i) {
        const std::string where = "rewards[" + std::to_string(i) + "].";
        const auto s = field(rs[i], "state", where).get<std::size_t>();
        const auto a = field(rs[i], "action", where).get<std::size_t>();
        if (s >= m.n_states || a >= m.n_actions) throw std::invalid_argument("mdp: " + where + " index out of range");
        std::vector<Atom> support;
        for (const auto& pair : field(rs[i], "support", where)) {
          if (!pair.is_array() || pair.size() != 2) {
            throw std::invalid_argument("mdp: " + where + "support entries must be [value, probability]");
          }
          support.push_back({pair[0].get<double>(), pair[1].get<double>()});
        }
        m.reward[s][a] = std::move(support);
      }
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("mdp: ") + e.what());
  }
  m.validate();
  return m;
}

MdpModel load_mdp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("mdp: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_mdp(ss.str());
}

MdpEnvironment::MdpEnvironment(MdpModel model) : model_(std::move(model)) {
  model_.validate();
  state_ = model_.start_state;
}

std::size_t MdpEnvironment::reset(Rng&) {
  state_ = model_.start_state;
  return state_;
}

StepResult MdpEnvironment::step(std::size_t action, Rng& rng) {
  if (action >= model_.n_actions) throw std::out_of_range("MdpEnvironment::step: action out of range");
  const double r = sample_reward(model_.reward[state_][action], rng);
  const std::size_t next = sample_index(model_.transition[state_][action], rng);
  state_ = next;
  return {next, r, model_.terminal[next]};
}

}  // namespace gqh
