#include "tihdp/priority.hpp"

#include <algorithm>
#include <stdexcept>

namespace tihdp {

PriorityVector PriorityVector::uniform(int objects, double k_phi, int owner) {
    PriorityVector pv;
    pv.phi.assign(static_cast<std::size_t>(objects), 1.0 / objects);
    pv.k_phi = k_phi;
    pv.owner = owner;
    return pv;
}

std::vector<double> request_signal(int alpha, int target, int objects) {
    if (target < 0 || target >= objects)
        throw std::invalid_argument("request_signal: target out of range");
    std::vector<double> d(static_cast<std::size_t>(objects), 0.0);
    if (alpha == 1) d[static_cast<std::size_t>(target)] = 1.0;
    return d;
}

int response_signal(int beta) { return beta == 1 ? 1 : 0; }

std::vector<double> map_local_ops(const std::vector<int>& c_local,
                                  const std::vector<int>& neighbor_ids,
                                  int objects) {
    if (c_local.size() != neighbor_ids.size())
        throw std::invalid_argument("map_local_ops: c_local and neighbor_ids size mismatch");
    std::vector<double> c_bar(static_cast<std::size_t>(objects), 0.0);
    std::vector<bool> seen(static_cast<std::size_t>(objects), false);
    for (std::size_t k = 0; k < c_local.size(); ++k) {
        int id = neighbor_ids[k];
        if (id < 0) continue;  // padded slot
        if (id >= objects)
            throw std::invalid_argument("map_local_ops: neighbor id out of range");
        if (seen[static_cast<std::size_t>(id)])
            throw std::invalid_argument("map_local_ops: duplicate neighbor id");
        seen[static_cast<std::size_t>(id)] = true;
        c_bar[static_cast<std::size_t>(id)] = static_cast<double>(c_local[k]);
    }
    return c_bar;
}

PriorityVector update_priorities(const PriorityVector& pv,
                                 const std::vector<double>& c_bar,
                                 int sigma_i,
                                 const std::vector<double>& request_sums,
                                 const std::vector<bool>& completed) {
    const std::size_t m = pv.phi.size();
    if (c_bar.size() != m || request_sums.size() != m || completed.size() != m)
        throw std::invalid_argument("update_priorities: size mismatch");

    PriorityVector out = pv;
    double total = 0.0;
    for (std::size_t l = 0; l < m; ++l) {
        double v;
        if (completed[l]) {
            v = 0.0;
        } else {
            v = (1.0 - pv.k_phi) * pv.phi[l] +
                pv.k_phi * (c_bar[l] + sigma_i * request_sums[l]);
            if (v < 0.0) v = 0.0;
        }
        out.phi[l] = v;
        total += v;
    }
    if (total > 0.0) {
        for (auto& v : out.phi) v /= total;
    } else {
        std::fill(out.phi.begin(), out.phi.end(), 0.0);
    }
    return out;
}

std::optional<int> select_target(const PriorityVector& pv) {
    int best = -1;
    double best_v = 0.0;
    for (std::size_t l = 0; l < pv.phi.size(); ++l) {
        if (pv.phi[l] > best_v) {
            best_v = pv.phi[l];
            best = static_cast<int>(l);
        }
    }
    if (best < 0) return std::nullopt;
    return best;
}

CommResult comm_round(const std::vector<RobotSignals>& signals, int objects) {
    CommResult res;
    res.request_sums.assign(static_cast<std::size_t>(objects), 0.0);
    res.sigma.reserve(signals.size());
    for (const auto& s : signals) {
        if (s.alpha == 1 && s.target >= 0) {
            auto d = request_signal(s.alpha, s.target, objects);
            for (std::size_t l = 0; l < d.size(); ++l) res.request_sums[l] += d[l];
        }
        res.sigma.push_back(response_signal(s.beta));
    }
    return res;
}

}  // namespace tihdp
