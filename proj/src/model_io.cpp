#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "flm/model.hpp"

namespace flm {

namespace {

using nlohmann::json;

const json& require(const json& j, const char* key, const char* where) {
    auto it = j.find(key);
    if (it == j.end())
        throw std::runtime_error(std::string("checkpoint: missing section '") + key + "' in " +
                                 where);
    return *it;
}

} // namespace

void save_model(const FlmModel& model, const std::string& path) {
    json j;
    j["m"] = model.m;
    j["N"] = model.subnet_count();
    json subs = json::array();
    for (const auto& sn : model.subnets) {
        json s;
        s["n"] = sn.freq;
        s["A"] = sn.amp;
        s["b"] = sn.bias;
        subs.push_back(std::move(s));
    }
    j["subnets"] = std::move(subs);
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("save_model: cannot open " + path);
    out << j.dump(2) << "\n";
}

FlmModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("load_model: cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("checkpoint: unparseable file " + path + ": " + e.what());
    }
    const int m = require(j, "m", "checkpoint root").get<int>();
    const int n = require(j, "N", "checkpoint root").get<int>();
    const json& subs = require(j, "subnets", "checkpoint root");
    if (!subs.is_array() || static_cast<int>(subs.size()) != n)
        throw std::runtime_error("checkpoint: 'subnets' must be an array of N entries");
    FlmModel model(m, n);
    const std::size_t l = static_cast<std::size_t>(model.units_per_subnet());
    for (int s = 0; s < n; ++s) {
        const json& e = subs[static_cast<std::size_t>(s)];
        const std::string where = "subnet " + std::to_string(s);
        auto freq = require(e, "n", where.c_str()).get<std::vector<double>>();
        auto amp = require(e, "A", where.c_str()).get<std::vector<double>>();
        auto bias = require(e, "b", where.c_str()).get<std::vector<double>>();
        if (freq.size() != static_cast<std::size_t>(m) || amp.size() != l || bias.size() != l)
            throw std::runtime_error("checkpoint: wrong vector length in " + where);
        model.subnets[static_cast<std::size_t>(s)].freq = std::move(freq);
        model.subnets[static_cast<std::size_t>(s)].amp = std::move(amp);
        model.subnets[static_cast<std::size_t>(s)].bias = std::move(bias);
    }
    return model;
}

} // namespace flm
