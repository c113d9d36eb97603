#include "cardiotwin/params.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cardiotwin/errors.hpp"

namespace cardiotwin {

namespace {

using nlohmann::json;

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw ValidationError(std::string("parameter '") + name + "' must be positive and finite");
    }
}

void reject_unknown_keys(const json& j, std::initializer_list<const char*> known, const char* what) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool found = false;
        for (const char* k : known) {
            if (it.key() == k) {
                found = true;
                break;
            }
        }
        if (!found) {
            throw ValidationError(std::string(what) + ": unknown key '" + it.key() + "'");
        }
    }
}

double get_number(const json& j, const char* key, const char* what) {
    if (!j.contains(key)) throw ValidationError(std::string(what) + ": missing key '" + key + "'");
    if (!j.at(key).is_number()) throw ValidationError(std::string(what) + ": key '" + key + "' is not a number");
    return j.at(key).get<double>();
}

json read_json_file(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw FileError(std::string("cannot open ") + what + " file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string(what) + ": malformed JSON in " + path + ": " + e.what());
    }
    return j;
}

constexpr std::initializer_list<const char*> kPatientKeys = {
    "r_m", "r_a", "e_max", "e_min", "v_d", "start_v", "t_c",
    "r_c", "r_s", "c_a", "c_s", "c_r", "l_s", "start_pao",
};

constexpr std::initializer_list<const char*> kLvadKeys = {
    "r_o", "r_i", "alpha", "p_bar", "l_i", "l_o", "beta0", "beta1", "beta2", "omega_schedule",
};

json omega_to_json(const OmegaSchedule& s) {
    if (s.is_constant()) return json{{"type", "constant"}, {"level", s.end}};
    return json{{"type", "ramp"}, {"start", s.start}, {"end", s.end}, {"duration", s.ramp_duration}};
}

OmegaSchedule omega_from_json(const json& j) {
    if (!j.is_object() || !j.contains("type")) {
        throw ValidationError("omega_schedule: expected an object with a 'type' key");
    }
    const std::string type = j.at("type").get<std::string>();
    OmegaSchedule s;
    if (type == "constant") {
        reject_unknown_keys(j, {"type", "level"}, "omega_schedule");
        s = OmegaSchedule::constant(get_number(j, "level", "omega_schedule"));
    } else if (type == "ramp") {
        reject_unknown_keys(j, {"type", "start", "end", "duration"}, "omega_schedule");
        s = OmegaSchedule::ramp(get_number(j, "start", "omega_schedule"),
                                get_number(j, "end", "omega_schedule"),
                                get_number(j, "duration", "omega_schedule"));
    } else {
        throw ValidationError("omega_schedule: unknown type '" + type + "'");
    }
    s.validate();
    return s;
}

}  // namespace

void PatientParams::validate() const {
    require_positive(r_m, "r_m");
    require_positive(r_a, "r_a");
    require_positive(e_max, "e_max");
    require_positive(e_min, "e_min");
    require_positive(v_d, "v_d");
    require_positive(t_c, "t_c");
    require_positive(r_c, "r_c");
    require_positive(r_s, "r_s");
    require_positive(c_a, "c_a");
    require_positive(c_s, "c_s");
    require_positive(c_r, "c_r");
    require_positive(l_s, "l_s");
    require_positive(start_pao, "start_pao");
    if (!(start_v >= 0.0) || !std::isfinite(start_v)) {
        throw ValidationError("parameter 'start_v' must be non-negative and finite");
    }
    if (!(e_max > e_min)) {
        throw ValidationError("e_max must exceed e_min");
    }
}

void OmegaSchedule::validate() const {
    if (!(start >= 0.0) || !(end >= 0.0) || !std::isfinite(start) || !std::isfinite(end)) {
        throw ValidationError("omega_schedule: pump speeds must be non-negative and finite");
    }
    if (!(ramp_duration >= 0.0) || !std::isfinite(ramp_duration)) {
        throw ValidationError("omega_schedule: ramp duration must be non-negative and finite");
    }
}

void LvadParams::validate() const {
    require_positive(r_o, "r_o");
    require_positive(r_i, "r_i");
    require_positive(p_bar, "p_bar");
    require_positive(l_i, "l_i");
    require_positive(l_o, "l_o");
    if (!std::isfinite(alpha) || !std::isfinite(beta0) || !std::isfinite(beta1) || !std::isfinite(beta2)) {
        throw ValidationError("lvad constants must be finite");
    }
    if (std::abs(flow_denominator()) < 1e-12) {
        throw ValidationError("lvad parameters make the pump-flow equation singular (-l_i - l_o + beta1 == 0)");
    }
    omega_schedule.validate();
}

std::string to_json_string(const PatientParams& p, int indent) {
    const json j{
        {"r_m", p.r_m},   {"r_a", p.r_a},   {"e_max", p.e_max}, {"e_min", p.e_min},
        {"v_d", p.v_d},   {"start_v", p.start_v}, {"t_c", p.t_c},
        {"r_c", p.r_c},   {"r_s", p.r_s},   {"c_a", p.c_a},     {"c_s", p.c_s},
        {"c_r", p.c_r},   {"l_s", p.l_s},   {"start_pao", p.start_pao},
    };
    return j.dump(indent);
}

std::string to_json_string(const LvadParams& p, int indent) {
    json j{
        {"r_o", p.r_o},     {"r_i", p.r_i},     {"alpha", p.alpha}, {"p_bar", p.p_bar},
        {"l_i", p.l_i},     {"l_o", p.l_o},     {"beta0", p.beta0}, {"beta1", p.beta1},
        {"beta2", p.beta2}, {"omega_schedule", omega_to_json(p.omega_schedule)},
    };
    return j.dump(indent);
}

PatientParams patient_params_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("patient params: malformed JSON: ") + e.what());
    }
    reject_unknown_keys(j, kPatientKeys, "patient params");
    PatientParams p;
    p.r_m = get_number(j, "r_m", "patient params");
    p.r_a = get_number(j, "r_a", "patient params");
    p.e_max = get_number(j, "e_max", "patient params");
    p.e_min = get_number(j, "e_min", "patient params");
    p.v_d = get_number(j, "v_d", "patient params");
    p.start_v = get_number(j, "start_v", "patient params");
    p.t_c = get_number(j, "t_c", "patient params");
    p.r_c = get_number(j, "r_c", "patient params");
    p.r_s = get_number(j, "r_s", "patient params");
    p.c_a = get_number(j, "c_a", "patient params");
    p.c_s = get_number(j, "c_s", "patient params");
    p.c_r = get_number(j, "c_r", "patient params");
    p.l_s = get_number(j, "l_s", "patient params");
    p.start_pao = get_number(j, "start_pao", "patient params");
    p.validate();
    return p;
}

LvadParams lvad_params_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("lvad params: malformed JSON: ") + e.what());
    }
    reject_unknown_keys(j, kLvadKeys, "lvad params");
    LvadParams p;
    p.r_o = get_number(j, "r_o", "lvad params");
    p.r_i = get_number(j, "r_i", "lvad params");
    p.alpha = get_number(j, "alpha", "lvad params");
    p.p_bar = get_number(j, "p_bar", "lvad params");
    p.l_i = get_number(j, "l_i", "lvad params");
    p.l_o = get_number(j, "l_o", "lvad params");
    p.beta0 = get_number(j, "beta0", "lvad params");
    p.beta1 = get_number(j, "beta1", "lvad params");
    p.beta2 = get_number(j, "beta2", "lvad params");
    if (j.contains("omega_schedule")) p.omega_schedule = omega_from_json(j.at("omega_schedule"));
    p.validate();
    return p;
}

PatientParams load_patient_params(const std::string& path) {
    return patient_params_from_json(read_json_file(path, "patient params").dump());
}

LvadParams load_lvad_params(const std::string& path) {
    return lvad_params_from_json(read_json_file(path, "lvad params").dump());
}

}  // namespace cardiotwin
