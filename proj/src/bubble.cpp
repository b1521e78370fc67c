#include "ibs/bubble.hpp"

#include "ibs/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ibs {

namespace {

// U(t) linearly interpolated between tabulated amplitude samples.
double tabulated_potential(const TabulatedBubble& tab, double t,
                           const MarketParams& params) {
    const auto& s = tab.samples;
    if (s.empty() || t < s.front().first || t > s.back().first)
        throw CoverageError("tabulated bubble does not cover day " +
                            std::to_string(t));
    auto it = std::lower_bound(
        s.begin(), s.end(), t,
        [](const auto& sample, double day) { return sample.first < day; });
    if (it->first == t) return potential_from_bubble(it->second, params);
    auto hi = it;
    auto lo = it - 1;
    double u0 = potential_from_bubble(lo->second, params);
    double u1 = potential_from_bubble(hi->second, params);
    double w = (t - lo->first) / (hi->first - lo->first);
    return u0 + w * (u1 - u0);
}

}  // namespace

void BubbleSpec::validate() const {
    std::visit(
        [](const auto& b) {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, StepBubble>) {
                if (!(b.t1 >= 0.0) || !(b.t1 <= b.t2))
                    throw DomainError("step bubble requires 0 <= t1 <= t2");
                if (!std::isfinite(b.f0))
                    throw DomainError("step bubble amplitude must be finite");
            } else if constexpr (std::is_same_v<T, PowerLawRhoBubble>) {
                if (b.c == 0.0)
                    throw DomainError("power-law rho requires c != 0");
                if (!std::isfinite(b.a) || !std::isfinite(b.b) || !std::isfinite(b.c))
                    throw DomainError("power-law rho parameters must be finite");
            } else if constexpr (std::is_same_v<T, TabulatedBubble>) {
                if (b.samples.empty())
                    throw DomainError("tabulated bubble needs samples");
                for (size_t i = 1; i < b.samples.size(); ++i)
                    if (!(b.samples[i - 1].first < b.samples[i].first))
                        throw DomainError(
                            "tabulated bubble days must be strictly increasing");
            }
        },
        value);
}

nlohmann::json BubbleSpec::to_json() const {
    nlohmann::json doc;
    std::visit(
        [&doc](const auto& b) {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, ZeroBubble>) {
                doc["type"] = "zero";
            } else if constexpr (std::is_same_v<T, StepBubble>) {
                doc["type"] = "step";
                doc["t1"] = b.t1;
                doc["t2"] = b.t2;
                doc["f0"] = b.f0;
            } else if constexpr (std::is_same_v<T, PowerLawRhoBubble>) {
                doc["type"] = "power_law_rho";
                doc["a"] = b.a;
                doc["b"] = b.b;
                doc["c"] = b.c;
            } else {
                doc["type"] = "tabulated";
                auto rows = nlohmann::json::array();
                for (const auto& [day, f] : b.samples)
                    rows.push_back({day, f});
                doc["samples"] = rows;
            }
        },
        value);
    return doc;
}

BubbleSpec BubbleSpec::from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("type"))
        throw ParseError("bubble spec must be an object with a \"type\" tag");
    std::string type = doc.at("type").get<std::string>();
    try {
        BubbleSpec spec;
        if (type == "zero") {
            spec = BubbleSpec(ZeroBubble{});
        } else if (type == "step") {
            spec = BubbleSpec(StepBubble{doc.at("t1").get<double>(),
                                         doc.at("t2").get<double>(),
                                         doc.at("f0").get<double>()});
        } else if (type == "power_law_rho") {
            spec = BubbleSpec(PowerLawRhoBubble{doc.at("a").get<double>(),
                                                doc.at("b").get<double>(),
                                                doc.at("c").get<double>()});
        } else if (type == "tabulated") {
            TabulatedBubble tab;
            for (const auto& row : doc.at("samples"))
                tab.samples.emplace_back(row.at(0).get<double>(),
                                         row.at(1).get<double>());
            spec = BubbleSpec(std::move(tab));
        } else {
            throw ParseError("unknown bubble type \"" + type + "\"");
        }
        spec.validate();
        return spec;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad bubble spec: ") + e.what());
    }
}

void PotentialSeries::validate() const {
    if (days.size() != values.size())
        throw ShapeError("potential series days/values size mismatch");
    for (size_t i = 0; i < days.size(); ++i) {
        if (!std::isfinite(values[i]))
            throw DomainError("potential value at day " +
                              std::to_string(days[i]) + " not finite");
        if (i > 0 && !(days[i - 1] < days[i]))
            throw DomainError("potential series days must be strictly increasing");
    }
}

double potential_from_bubble(double f, const MarketParams& params) {
    params.validate();
    if (!std::isfinite(f)) throw DomainError("bubble amplitude must be finite");
    double gap = params.sigma - f;
    if (std::abs(gap) < 1e-9 * params.sigma)
        throw SingularityError("bubble amplitude at the volatility pole f ~ sigma");
    return (params.r - params.mu) * f / gap;
}

double bubble_from_potential(double u, const MarketParams& params) {
    params.validate();
    if (!std::isfinite(u)) throw DomainError("potential must be finite");
    double denom = params.r - params.mu + u;
    if (std::abs(denom) <= 1e-12 * (std::abs(params.r - params.mu) + std::abs(u)))
        throw PoleError("potential at the pole U = mu - r (infinite bubble)");
    return params.sigma * u / denom;
}

double bubble_amplitude(const BubbleSpec& spec, double t, const MarketParams& params) {
    spec.validate();
    return std::visit(
        [&](const auto& b) -> double {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, ZeroBubble>) {
                return 0.0;
            } else if constexpr (std::is_same_v<T, StepBubble>) {
                return (t >= b.t1 && t <= b.t2) ? b.f0 : 0.0;
            } else if constexpr (std::is_same_v<T, PowerLawRhoBubble>) {
                if (t < 1.0)
                    throw DomainError("power-law rho bubble defined for t >= 1");
                double u = -b.c * b.b * std::pow(t, b.c - 1.0);
                return bubble_from_potential(u, params);
            } else {
                const auto& s = b.samples;
                if (t < s.front().first || t > s.back().first)
                    throw CoverageError("tabulated bubble does not cover day " +
                                        std::to_string(t));
                auto it = std::lower_bound(s.begin(), s.end(), t,
                                           [](const auto& sample, double day) {
                                               return sample.first < day;
                                           });
                if (it->first == t) return it->second;
                auto lo = it - 1;
                double w = (t - lo->first) / (it->first - lo->first);
                return lo->second + w * (it->second - lo->second);
            }
        },
        spec.value);
}

std::function<double(double)> potential_evaluator(const BubbleSpec& spec,
                                                  const MarketParams& params) {
    spec.validate();
    params.validate();
    return std::visit(
        [&params](const auto& b) -> std::function<double(double)> {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, ZeroBubble>) {
                return [](double) { return 0.0; };
            } else if constexpr (std::is_same_v<T, StepBubble>) {
                double u0 = potential_from_bubble(b.f0, params);
                double t1 = b.t1, t2 = b.t2;
                return [u0, t1, t2](double t) {
                    return (t >= t1 && t <= t2) ? u0 : 0.0;
                };
            } else if constexpr (std::is_same_v<T, PowerLawRhoBubble>) {
                double bb = b.b, cc = b.c;
                return [bb, cc](double t) {
                    if (t < 1.0)
                        throw DomainError("power-law potential defined for t >= 1");
                    return -cc * bb * std::pow(t, cc - 1.0);
                };
            } else {
                TabulatedBubble tab = b;
                MarketParams p = params;
                return [tab, p](double t) { return tabulated_potential(tab, t, p); };
            }
        },
        spec.value);
}

double accumulated_potential(const BubbleSpec& spec, double t, double maturity,
                             const MarketParams& params) {
    spec.validate();
    params.validate();
    if (!(t <= maturity))
        throw DomainError("accumulated potential requires t <= T");
    return std::visit(
        [&](const auto& b) -> double {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, ZeroBubble>) {
                return 0.0;
            } else if constexpr (std::is_same_v<T, StepBubble>) {
                double overlap = std::max(
                    0.0, std::min(maturity, b.t2) - std::max(t, b.t1));
                if (overlap == 0.0) return 0.0;
                return potential_from_bubble(b.f0, params) * overlap;
            } else if constexpr (std::is_same_v<T, PowerLawRhoBubble>) {
                if (t < 1.0)
                    throw DomainError("power-law rho defined for t >= 1");
                return -b.b * (std::pow(maturity, b.c) - std::pow(t, b.c));
            } else {
                const auto& s = b.samples;
                if (t < s.front().first || maturity > s.back().first)
                    throw CoverageError("tabulated bubble does not cover [" +
                                        std::to_string(t) + ", " +
                                        std::to_string(maturity) + "]");
                // Trapezoid over the sample grid restricted to [t, T].
                double acc = 0.0;
                for (size_t i = 0; i + 1 < s.size(); ++i) {
                    double a0 = std::max(t, s[i].first);
                    double a1 = std::min(maturity, s[i + 1].first);
                    if (a0 >= a1) continue;
                    double u0 = tabulated_potential(b, a0, params);
                    double u1 = tabulated_potential(b, a1, params);
                    acc += 0.5 * (u0 + u1) * (a1 - a0);
                }
                return acc;
            }
        },
        spec.value);
}

}  // namespace ibs
