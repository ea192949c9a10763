#include "crmdp/instance.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "crmdp/errors.hpp"

namespace crmdp {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& what) { throw ValidationError(what); }

std::vector<std::string> read_labels(const json& doc, const char* key) {
    if (!doc.contains(key) || !doc[key].is_array()) invalid(std::string("'") + key + "' must be a list of labels");
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& l : doc[key]) {
        if (!l.is_string()) invalid(std::string("'") + key + "' entries must be strings");
        if (!seen.insert(l.get<std::string>()).second)
            invalid(std::string("duplicate label '") + l.get<std::string>() + "' in '" + key + "'");
        out.push_back(l.get<std::string>());
    }
    if (out.empty()) invalid(std::string("'") + key + "' must not be empty");
    return out;
}

prec_t read_number(const json& j, const std::string& where) {
    if (!j.is_number()) invalid(where + " must be a number");
    return j.get<prec_t>();
}

numvec read_vector(const json& j, std::size_t n, const std::string& where) {
    if (!j.is_array() || j.size() != n) invalid(where + " must be a list of " + std::to_string(n) + " numbers");
    numvec out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = read_number(j[i], where + "[" + std::to_string(i) + "]");
    return out;
}

Matrix read_matrix(const json& j, std::size_t cols, const std::string& where) {
    if (!j.is_array()) invalid(where + " must be a list of rows");
    Matrix m(0, cols);
    for (std::size_t i = 0; i < j.size(); ++i) m.append_row(read_vector(j[i], cols, where + "[" + std::to_string(i) + "]"));
    return m;
}

std::string sa_where(const char* key, std::size_t s, std::size_t a) {
    return std::string(key) + "[" + std::to_string(s) + "][" + std::to_string(a) + "]";
}

template <class F>
auto guarded(const std::string& where, F&& f) {
    try {
        return f();
    } catch (const ValidationError&) {
        throw;
    } catch (const Error& e) {
        throw ValidationError(where + ": " + e.what());
    }
}

std::vector<UncertaintySet> read_sa_sets(const json& u, const Mdp& mdp) {
    const std::size_t S = mdp.n_states();
    const std::size_t A = mdp.n_actions();
    const std::string kind = u.value("kind", "");
    std::vector<UncertaintySet> sets;
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            const auto p = mdp.transition(s, a);
            const std::string where = "uncertainty at (s=" + std::to_string(s) + ", a=" + std::to_string(a) + ")";
            sets.push_back(guarded(where, [&]() -> UncertaintySet {
                if (kind == "singleton") return UncertaintySet::singleton(numvec(p.begin(), p.end()));
                if (kind == "box") {
                    if (u.contains("lower_factor") || u.contains("upper_factor")) {
                        const prec_t lf = read_number(u.value("lower_factor", json(1.0)), "lower_factor");
                        const json& ufj = u.value("upper_factor", json(1.0));
                        const prec_t uf = ufj.is_null() ? inf : read_number(ufj, "upper_factor");
                        return box_from_nominal(p, lf, uf);
                    }
                    if (!u.contains("lower") || !u.contains("upper"))
                        invalid("box uncertainty needs lower_factor/upper_factor or lower/upper arrays");
                    return UncertaintySet::box(read_vector(u["lower"].at(s).at(a), S, sa_where("lower", s, a)),
                                               read_vector(u["upper"].at(s).at(a), S, sa_where("upper", s, a)));
                }
                if (kind == "polyhedral") {
                    if (!u.contains("A") || !u.contains("c")) invalid("polyhedral uncertainty needs 'A' and 'c'");
                    Matrix M = read_matrix(u["A"].at(s).at(a), S, sa_where("A", s, a));
                    numvec c = read_vector(u["c"].at(s).at(a), M.rows(), sa_where("c", s, a));
                    if (M.rows() == 0) return UncertaintySet::simplex(S);
                    return UncertaintySet::polyhedral(std::move(M), std::move(c));
                }
                invalid("unknown uncertainty kind '" + kind + "'");
            }));
        }
    return sets;
}

std::vector<SRectangularSet> read_s_sets(const json& u, const Mdp& mdp) {
    const std::size_t S = mdp.n_states();
    const std::size_t A = mdp.n_actions();
    if (!u.contains("A") || !u.contains("c")) invalid("srect uncertainty needs 'A' and 'c'");
    std::vector<SRectangularSet> sets;
    for (std::size_t s = 0; s < S; ++s) {
        const std::string where = "srect uncertainty at s=" + std::to_string(s);
        Matrix M = read_matrix(u["A"].at(s), A * S, "A[" + std::to_string(s) + "]");
        numvec c = read_vector(u["c"].at(s), M.rows(), "c[" + std::to_string(s) + "]");
        sets.push_back(guarded(where, [&] { return SRectangularSet(A, S, std::move(M), std::move(c)); }));
    }
    return sets;
}

} // namespace

Instance parse_instance(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        // Convert the byte offset into a line and column.
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError("parse error at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                         e.what());
    }
    if (!doc.is_object()) invalid("instance document must be a JSON object");

    try {
        Instance inst{read_labels(doc, "states"), read_labels(doc, "actions"), Rmdp::nominal(Mdp(Matrix(1, 1), Matrix(1, 1, 1.0), 0.5, {1.0})),
                      std::nullopt, std::nullopt};
        const std::size_t S = inst.states.size();
        const std::size_t A = inst.actions.size();
        if (!doc.contains("discount")) invalid("'discount' is required");
        const prec_t discount = read_number(doc["discount"], "discount");
        const numvec initial = read_vector(doc.value("initial", json()), S, "initial");

        const json& r = doc.value("rewards", json());
        if (!r.is_array() || r.size() != S) invalid("'rewards' must have one row per state");
        Matrix rewards(0, A);
        for (std::size_t s = 0; s < S; ++s) rewards.append_row(read_vector(r[s], A, "rewards[" + std::to_string(s) + "]"));

        const json& nom = doc.value("nominal", json());
        if (!nom.is_array() || nom.size() != S) invalid("'nominal' must have one block per state");
        Matrix trans(0, S);
        for (std::size_t s = 0; s < S; ++s) {
            if (!nom[s].is_array() || nom[s].size() != A)
                invalid("nominal[" + std::to_string(s) + "] must have one row per action");
            for (std::size_t a = 0; a < A; ++a) trans.append_row(read_vector(nom[s][a], S, sa_where("nominal", s, a)));
        }
        Mdp mdp(std::move(rewards), std::move(trans), discount, initial);

        const json u = doc.value("uncertainty", json{{"kind", "singleton"}});
        if (!u.is_object() || !u.contains("kind") || !u["kind"].is_string())
            invalid("'uncertainty' must be an object with a 'kind'");
        if (u["kind"] == "srect") inst.model = Rmdp(mdp, read_s_sets(u, mdp));
        else inst.model = Rmdp(mdp, read_sa_sets(u, mdp));

        if (doc.contains("regularization") && !doc["regularization"].is_null()) {
            const json& g = doc["regularization"];
            if (!g.is_object()) invalid("'regularization' must be an object");
            Policy baseline = Policy::uniform(S, A);
            const json bl = g.value("baseline", json("uniform"));
            if (bl.is_array()) {
                if (bl.size() != S) invalid("baseline must have one row per state");
                Matrix m(0, A);
                for (std::size_t s = 0; s < S; ++s) m.append_row(read_vector(bl[s], A, "baseline[" + std::to_string(s) + "]"));
                baseline = guarded("baseline", [&] { return Policy(std::move(m)); });
            } else if (bl != "uniform") {
                invalid("baseline must be \"uniform\" or an array");
            }
            prec_t b = 1.0;
            const json bj = g.value("b", json(1.0));
            if (bj == "auto") {
                const prec_t eps = read_number(g.value("epsilon", json()), "regularization.epsilon");
                b = guarded("regularization.epsilon", [&] { return choose_b(eps, discount, A); });
                inst.epsilon = eps;
                if (A == 1) b = 1.0;
            } else {
                b = read_number(bj, "regularization.b");
            }
            inst.regularization = guarded("regularization", [&] { return RegularizationConfig(baseline, b); });
        }
        return inst;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed instance: ") + e.what());
    } catch (const ValidationError&) {
        throw;
    } catch (const Error& e) {
        throw ValidationError(e.what());
    }
}

Instance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read instance file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_instance(ss.str());
}

namespace {
json to_json(std::span<const prec_t> v) { return json(numvec(v.begin(), v.end())); }
json to_json(const Matrix& m) {
    json out = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) out.push_back(to_json(m.row(i)));
    return out;
}
} // namespace

std::string serialize_instance(const Instance& inst) {
    const Rmdp& m = inst.model;
    const Mdp& base = m.base();
    const std::size_t S = base.n_states();
    const std::size_t A = base.n_actions();
    json doc;
    doc["states"] = inst.states;
    doc["actions"] = inst.actions;
    doc["discount"] = base.discount();
    doc["initial"] = base.initial();
    doc["rewards"] = to_json(base.rewards());
    json nom = json::array();
    for (std::size_t s = 0; s < S; ++s) {
        json rows = json::array();
        for (std::size_t a = 0; a < A; ++a) rows.push_back(to_json(base.transition(s, a)));
        nom.push_back(rows);
    }
    doc["nominal"] = nom;

    if (m.rectangularity() == Rectangularity::s) {
        json Aj = json::array(), cj = json::array();
        for (const auto& u : m.s_sets()) {
            Aj.push_back(to_json(u.A()));
            cj.push_back(u.c());
        }
        doc["uncertainty"] = {{"kind", "srect"}, {"A", Aj}, {"c", cj}};
    } else {
        const auto& sets = m.sa_sets();
        const bool all_single = std::all_of(sets.begin(), sets.end(), [](const auto& u) { return u.is_singleton(); });
        const bool all_box = std::all_of(sets.begin(), sets.end(), [](const auto& u) { return u.is_box(); });
        bool nominal_singletons = all_single;
        for (std::size_t s = 0; s < S && nominal_singletons; ++s)
            for (std::size_t a = 0; a < A; ++a) {
                const auto& p = std::get<Singleton>(m.set(s, a).data()).nominal;
                const auto q = base.transition(s, a);
                if (!std::equal(p.begin(), p.end(), q.begin())) nominal_singletons = false;
            }
        if (nominal_singletons) {
            doc["uncertainty"] = {{"kind", "singleton"}};
        } else if (all_box) {
            json lo = json::array(), hi = json::array();
            for (std::size_t s = 0; s < S; ++s) {
                json l = json::array(), h = json::array();
                for (std::size_t a = 0; a < A; ++a) {
                    const auto& bx = std::get<BoxSimplex>(m.set(s, a).data());
                    l.push_back(bx.lower);
                    h.push_back(bx.upper);
                }
                lo.push_back(l);
                hi.push_back(h);
            }
            doc["uncertainty"] = {{"kind", "box"}, {"lower", lo}, {"upper", hi}};
        } else {
            // Mixed kinds are written in the common polyhedral form.
            json Aj = json::array(), cj = json::array();
            for (std::size_t s = 0; s < S; ++s) {
                json as = json::array(), cs = json::array();
                for (std::size_t a = 0; a < A; ++a) {
                    const UncertaintySet p = box_as_polyhedral(m.set(s, a));
                    const auto& d = std::get<Polyhedral>(p.data());
                    as.push_back(to_json(d.A));
                    cs.push_back(d.c);
                }
                Aj.push_back(as);
                cj.push_back(cs);
            }
            doc["uncertainty"] = {{"kind", "polyhedral"}, {"A", Aj}, {"c", cj}};
        }
    }
    if (inst.regularization) {
        doc["regularization"] = {{"baseline", to_json(inst.regularization->baseline.probabilities())},
                                 {"b", inst.regularization->b}};
    }
    return doc.dump(2);
}

} // namespace crmdp
