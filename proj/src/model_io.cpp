#include "ruin/model_io.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ruin {

using nlohmann::json;

namespace {

Rational pow10_rational(int e) {
    Rational r(1);
    for (int i = 0; i < e; ++i) r *= Rational(10);
    return r;
}

} // namespace

Rational rational_from_decimal(const std::string& text) {
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) s += c;
    if (s.empty()) throw ParseError("empty numeric literal");

    if (auto slash = s.find('/'); slash != std::string::npos) {
        // GMP accepts "p/q" directly but not signs/blank parts; validate first
        const std::string num = s.substr(0, slash), den = s.substr(slash + 1);
        if (num.empty() || den.empty()) throw ParseError("bad fraction literal: " + text);
        return rational_from_decimal(num) / rational_from_decimal(den);
    }

    bool neg = false;
    std::size_t i = 0;
    if (s[i] == '+' || s[i] == '-') neg = (s[i++] == '-');
    std::string digits;
    int frac_len = 0, exponent = 0;
    bool seen_dot = false, any_digit = false;
    for (; i < s.size(); ++i) {
        const char c = s[i];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            digits += c;
            any_digit = true;
            if (seen_dot) ++frac_len;
        } else if (c == '.' && !seen_dot) {
            seen_dot = true;
        } else if ((c == 'e' || c == 'E') && any_digit) {
            exponent = std::stoi(s.substr(i + 1));
            break;
        } else {
            throw ParseError("bad numeric literal: " + text);
        }
    }
    if (!any_digit) throw ParseError("bad numeric literal: " + text);
    // GMP reads a leading zero as an octal prefix; strip to force base 10
    if (const auto nz = digits.find_first_not_of('0'); nz == std::string::npos) digits = "0";
    else digits.erase(0, nz);
    Rational r{mp::number<mp::gmp_int, mp::et_off>(digits)};
    const int net = exponent - frac_len;
    if (net >= 0) r *= pow10_rational(net);
    else r /= pow10_rational(-net);
    return neg ? Rational(-r) : r;
}

namespace {

SeasonSpec parse_season(const json& j, std::size_t idx) {
    const std::string where = "seasons[" + std::to_string(idx) + "]";
    if (!j.is_object()) throw ParseError(where + ": expected an object");
    if (j.contains("weights")) {
        if (!j["weights"].is_array()) throw ParseError(where + ".weights: expected an array");
        WeightSeason w;
        for (const auto& e : j["weights"]) {
            if (e.is_string()) w.weights.push_back({e.get<std::string>(), true});
            else if (e.is_number()) w.weights.push_back({e.dump(), false});
            else throw ParseError(where + ".weights: entries must be numbers or strings");
        }
        return w;
    }
    if (j.contains("poisson")) {
        if (!j["poisson"].is_number()) throw ParseError(where + ".poisson: expected a number");
        return PoissonSeason{j["poisson"].get<double>()};
    }
    if (j.contains("geometric")) {
        if (!j["geometric"].is_number()) throw ParseError(where + ".geometric: expected a number");
        return GeometricSeason{j["geometric"].get<double>()};
    }
    throw ParseError(where + ": need one of weights/poisson/geometric");
}

} // namespace

ModelSpec ModelSpec::parse(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("model file is not valid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("seasons") || !j["seasons"].is_array())
        throw ParseError("model file needs a top-level \"seasons\" array");
    ModelSpec spec;
    std::size_t idx = 0;
    for (const auto& sj : j["seasons"]) spec.seasons.push_back(parse_season(sj, idx++));
    if (spec.seasons.empty()) throw ParseError("model file has no seasons");
    if (j.contains("tail_eps")) {
        spec.tail_eps = j["tail_eps"].get<double>();
        if (!(spec.tail_eps > 0 && spec.tail_eps < 1)) throw ParseError("tail_eps must be in (0,1)");
    }
    if (j.contains("mode")) {
        const std::string m = j["mode"].get<std::string>();
        if (m == "float") spec.mode = NumericMode::Float;
        else if (m == "exact") spec.mode = NumericMode::Exact;
        else throw ParseError("mode must be \"float\" or \"exact\"");
    }
    return spec;
}

ModelSpec ModelSpec::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open model file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

bool ModelSpec::has_parametric() const {
    for (const auto& s : seasons)
        if (!std::holds_alternative<WeightSeason>(s)) return true;
    return false;
}

SeasonalModel<double> ModelSpec::to_float_model() const {
    std::vector<Pmf<double>> out;
    for (const auto& s : seasons) {
        if (const auto* w = std::get_if<WeightSeason>(&s)) {
            std::vector<double> v;
            for (const auto& e : w->weights) v.push_back(static_cast<double>(rational_from_decimal(e.literal)));
            out.push_back(Pmf<double>::from_weights(std::move(v)));
        } else if (const auto* p = std::get_if<PoissonSeason>(&s)) {
            out.push_back(Pmf<double>::poisson(p->lambda, tail_eps));
        } else {
            out.push_back(Pmf<double>::geometric(std::get<GeometricSeason>(s).p, tail_eps));
        }
    }
    return SeasonalModel<double>(std::move(out));
}

SeasonalModel<Rational> ModelSpec::to_exact_model() const {
    std::vector<Pmf<Rational>> out;
    for (const auto& s : seasons) {
        const auto* w = std::get_if<WeightSeason>(&s);
        if (!w)
            throw ParseError("exact mode supports finite-support weight seasons only; "
                             "poisson/geometric require mode=float");
        std::vector<Rational> v;
        for (const auto& e : w->weights) {
            if (!e.quoted && (e.literal.find('.') != std::string::npos ||
                              e.literal.find('e') != std::string::npos ||
                              e.literal.find('E') != std::string::npos))
                throw ParseError("exact mode: write non-integer weights as strings (\"" + e.literal +
                                 "\") so they parse as exact decimals");
            v.push_back(rational_from_decimal(e.literal));
        }
        out.push_back(Pmf<Rational>::from_weights(std::move(v)));
    }
    return SeasonalModel<Rational>(std::move(out));
}

std::string ModelSpec::to_json() const {
    json j;
    j["seasons"] = json::array();
    for (const auto& s : seasons) {
        json sj;
        if (const auto* w = std::get_if<WeightSeason>(&s)) {
            sj["weights"] = json::array();
            for (const auto& e : w->weights) sj["weights"].push_back(e.literal);
        } else if (const auto* p = std::get_if<PoissonSeason>(&s)) {
            sj["poisson"] = p->lambda;
        } else {
            sj["geometric"] = std::get<GeometricSeason>(s).p;
        }
        j["seasons"].push_back(sj);
    }
    j["tail_eps"] = tail_eps;
    j["mode"] = mode == NumericMode::Float ? "float" : "exact";
    return j.dump();
}

} // namespace ruin
