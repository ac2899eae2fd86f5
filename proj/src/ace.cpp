#include "lumisplit/ace.hpp"

#include <algorithm>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace lumisplit {

std::string AceReport::to_json() const {
    nlohmann::json j;
    j["iteration"] = iteration;
    j["areas"] = areas;
    j["epsilon"] = epsilon;
    j["kept"] = kept;
    j["dropped"] = dropped;
    return j.dump(2);
}

AceReport ace_estimate(const std::vector<std::vector<Image>>& m_n_frames, double epsilon,
                       int iteration) {
    if (m_n_frames.empty()) throw std::invalid_argument("ace_estimate: no frames");
    if (epsilon <= 0.0 || epsilon >= 1.0)
        throw std::invalid_argument("ace_estimate: epsilon must be in (0,1)");
    size_t n = m_n_frames[0].size();
    AceReport rep;
    rep.iteration = iteration;
    rep.epsilon = epsilon;
    rep.areas.assign(n, 0.0);
    for (const auto& frame : m_n_frames) {
        if (frame.size() != n) throw std::invalid_argument("ace_estimate: ragged mask sets");
        for (size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (double v : frame[i].data) s += v;
            rep.areas[i] += s / static_cast<double>(frame[i].pixels());
        }
    }
    for (auto& a : rep.areas) a /= static_cast<double>(m_n_frames.size());

    for (size_t i = 0; i < n; ++i) {
        if (rep.areas[i] > epsilon)
            rep.kept.push_back(static_cast<int>(i));
        else
            rep.dropped.push_back(static_cast<int>(i));
    }
    if (rep.kept.empty()) {
        // degenerate case: keep the single largest-area condition
        int arg = static_cast<int>(std::max_element(rep.areas.begin(), rep.areas.end()) -
                                   rep.areas.begin());
        rep.kept.push_back(arg);
        rep.dropped.erase(std::find(rep.dropped.begin(), rep.dropped.end(), arg));
    }
    return rep;
}

void ace_apply(LightSet& lights, const AceReport& report) {
    if (static_cast<int>(report.kept.size() + report.dropped.size()) != lights.n)
        throw std::invalid_argument("ace_apply: report does not match light set");
    if (lights.n_alive() != lights.n)
        throw std::logic_error("ace_apply: ACE already applied to this light set");
    lights.alive.assign(lights.n, 0);
    for (int i : report.kept) lights.alive[i] = 1;
}

}  // namespace lumisplit
