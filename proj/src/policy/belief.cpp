#include "masrisk/policy/belief.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace masrisk::policy {

namespace {
constexpr double kTol = 1e-9;
}

void validate_belief(const Belief& b) {
    if (b.support.empty() || b.support.size() != b.mass.size()) {
        throw std::invalid_argument("belief support and mass must be non-empty and aligned");
    }
    double sum = 0.0;
    for (double m : b.mass) {
        if (!(m >= 0.0)) throw std::invalid_argument("belief mass must be non-negative");
        sum += m;
    }
    if (std::abs(sum - 1.0) > kTol) throw std::invalid_argument("belief mass must sum to 1");
}

Belief bayes_update(const Belief& prior, const TransitionModel& transition, const ObservationModel& obs_model,
                    const std::string& action, const std::string& observation) {
    validate_belief(prior);
    const std::size_t n = prior.support.size();
    auto it = transition.find(action);
    if (it == transition.end()) it = transition.find("*");
    if (it == transition.end()) throw std::invalid_argument("no transition matrix for action '" + action + "'");
    const Matrix& T = it->second;
    if (T.size() != n) throw std::invalid_argument("transition matrix size does not match support");
    for (const auto& row : T) {
        if (row.size() != n) throw std::invalid_argument("transition matrix must be square");
        double s = 0.0;
        for (double x : row) {
            if (!(x >= 0.0)) throw std::invalid_argument("transition probabilities must be non-negative");
            s += x;
        }
        if (std::abs(s - 1.0) > kTol) throw std::invalid_argument("transition rows must sum to 1");
    }
    const auto sym = std::find(obs_model.symbols.begin(), obs_model.symbols.end(), observation);
    if (sym == obs_model.symbols.end()) throw std::invalid_argument("unknown observation symbol '" + observation + "'");
    const std::size_t o = static_cast<std::size_t>(sym - obs_model.symbols.begin());
    if (obs_model.likelihood.size() != n) throw std::invalid_argument("observation model size does not match support");

    Belief post{prior.support, std::vector<double>(n, 0.0)};
    double eta = 0.0;
    for (std::size_t next = 0; next < n; ++next) {
        double predicted = 0.0;
        for (std::size_t s = 0; s < n; ++s) predicted += prior.mass[s] * T[s][next];
        const double lik = obs_model.likelihood[next].at(o);
        if (!(lik >= 0.0)) throw std::invalid_argument("likelihoods must be non-negative");
        post.mass[next] = lik * predicted;
        eta += post.mass[next];
    }
    if (!(eta > 0.0)) throw std::domain_error("observation impossible under model");
    for (double& m : post.mass) m /= eta;
    return post;
}

}  // namespace masrisk::policy
