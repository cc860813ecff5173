#include "paramech/calculus.hpp"

#include <cctype>
#include <cstdlib>
#include <mutex>
#include <set>

namespace paramech {

std::string to_string(DerivativeConvention c) {
    return c == DerivativeConvention::paper ? "paper" : "independent";
}

DerivativeConvention convention_from_string(const std::string& s) {
    if (s == "paper") return DerivativeConvention::paper;
    if (s == "independent") return DerivativeConvention::independent;
    throw Error("unknown derivative convention: " + s);
}

std::string coordinate_name(CoordFamily f, int index) {
    switch (f) {
        case CoordFamily::Z: return "z" + std::to_string(index);
        case CoordFamily::Zbar: return "zb" + std::to_string(index);
        case CoordFamily::Zdot: return "zd" + std::to_string(index);
        case CoordFamily::Zbardot: return "zdb" + std::to_string(index);
    }
    return {};
}

std::pair<std::string, std::string> real_partners(CoordFamily f, int index) {
    const std::string i = std::to_string(index);
    if (f == CoordFamily::Z || f == CoordFamily::Zbar) return {"x" + i, "y" + i};
    return {"xd" + i, "yd" + i};
}

bool parse_coordinate_name(const std::string& name, CoordFamily& family, int& index) {
    std::size_t i = 0;
    while (i < name.size() && !std::isdigit(static_cast<unsigned char>(name[i]))) ++i;
    if (i == 0 || i == name.size()) return false;
    for (std::size_t k = i; k < name.size(); ++k) {
        if (!std::isdigit(static_cast<unsigned char>(name[k]))) return false;
    }
    const std::string fam = name.substr(0, i);
    if (fam == "z") family = CoordFamily::Z;
    else if (fam == "zb") family = CoordFamily::Zbar;
    else if (fam == "zd") family = CoordFamily::Zdot;
    else if (fam == "zdb") family = CoordFamily::Zbardot;
    else return false;
    index = std::atoi(name.c_str() + i);
    return true;
}

ExprPtr wirtinger_derivative(const ExprPtr& e, int index, CoordFamily which,
                             DerivativeConvention conv) {
    const auto [xc, yc] = real_partners(which, index);
    // paper:       d/dz = (d/dx - j d/dy)/2,  d/dzbar = (d/dx + j d/dy)/2
    // independent: d/dz = (d/dx + j d/dy)/2,  d/dzbar = (d/dx - j d/dy)/2
    const bool barred = (which == CoordFamily::Zbar || which == CoordFamily::Zbardot);
    const bool plus_j = (conv == DerivativeConvention::paper) ? barred : !barred;
    ExprPtr dx = diff_real(e, xc);
    ExprPtr dy = diff_real(e, yc);
    ExprPtr jdy = c_mul(make_constant(ParaNumber::j()), dy);
    ExprPtr sum = plus_j ? c_add(dx, jdy) : c_sub(dx, jdy);
    return simplify(c_mul(make_constant(0.5), sum));
}

namespace {

// Process-wide cache of differentiated trees keyed by (node, coordinate).
class DiffCache {
public:
    static DiffCache& instance() {
        static DiffCache c;
        return c;
    }

    ExprPtr get(const ExprPtr& e, const std::string& coord) {
        const Key key{e.get(), coord};
        {
            std::lock_guard<std::mutex> lock(mu_);
            auto it = cache_.find(key);
            if (it != cache_.end()) return it->second;
        }
        ExprPtr d = simplify(diff_real(e, coord));
        std::lock_guard<std::mutex> lock(mu_);
        anchors_.push_back(e);
        return cache_.emplace(key, std::move(d)).first->second;
    }

private:
    using Key = std::pair<const ExprNode*, std::string>;
    std::mutex mu_;
    std::map<Key, ExprPtr> cache_;
    std::vector<ExprPtr> anchors_; // keep keyed nodes alive
};

} // namespace

std::vector<std::string> underlying_real_coordinates(const ExprPtr& e) {
    std::set<std::string> reals;
    for (const std::string& name : collect_coordinates(e)) {
        CoordFamily f;
        int idx = 0;
        if (parse_coordinate_name(name, f, idx)) {
            const auto [xc, yc] = real_partners(f, idx);
            reals.insert(xc);
            reals.insert(yc);
        }
    }
    return {reals.begin(), reals.end()};
}

JetValue jet_evaluate(const ExprPtr& e, const EvalEnvironment& env, int order) {
    if (order < 0 || order > 2) throw Error("jet order must be 0, 1 or 2");
    JetValue jet;
    jet.value = evaluate(e, env);
    if (order < 1) return jet;
    auto& cache = DiffCache::instance();
    const std::vector<std::string> coords = underlying_real_coordinates(e);
    std::map<std::string, ExprPtr> firsts;
    for (const std::string& c : coords) {
        ExprPtr d = cache.get(e, c);
        jet.grad[c] = evaluate(d, env);
        firsts[c] = d;
    }
    if (order < 2) return jet;
    for (const std::string& a : coords) {
        for (const std::string& b : coords) {
            if (b < a) continue; // fill symmetric half, mirror below
            ExprPtr dd = cache.get(firsts[a], b);
            const ParaNumber v = evaluate(dd, env);
            jet.hess[{a, b}] = v;
            jet.hess[{b, a}] = v;
        }
    }
    return jet;
}

EvalEnvironment shift_environment(const EvalEnvironment& env,
                                  const std::string& real_coord, double delta) {
    std::size_t i = 0;
    while (i < real_coord.size() && !std::isdigit(static_cast<unsigned char>(real_coord[i]))) ++i;
    const std::string fam = real_coord.substr(0, i);
    const std::string idx = real_coord.substr(i);
    EvalEnvironment out = env;
    const auto shift = [&](const std::string& name, const ParaNumber& d) {
        if (const ParaNumber* v = env.find(name)) out.bind(name, *v + d);
    };
    if (fam == "x") {
        shift("z" + idx, ParaNumber::real(delta));
        shift("zb" + idx, ParaNumber::real(delta));
    } else if (fam == "y") {
        shift("z" + idx, ParaNumber{0.0, delta});
        shift("zb" + idx, ParaNumber{0.0, -delta});
    } else if (fam == "xd") {
        shift("zd" + idx, ParaNumber::real(delta));
        shift("zdb" + idx, ParaNumber::real(delta));
    } else if (fam == "yd") {
        shift("zd" + idx, ParaNumber{0.0, delta});
        shift("zdb" + idx, ParaNumber{0.0, -delta});
    } else {
        throw Error("not a real coordinate name: " + real_coord);
    }
    return out;
}

ParaNumber fd_oracle(const ExprPtr& e, const EvalEnvironment& env,
                     const std::string& real_coord, double h) {
    if (h <= 0.0) throw Error("fd_oracle requires h > 0");
    const ParaNumber fp = evaluate(e, shift_environment(env, real_coord, h));
    const ParaNumber fm = evaluate(e, shift_environment(env, real_coord, -h));
    return (fp - fm) * (1.0 / (2.0 * h));
}

} // namespace paramech
