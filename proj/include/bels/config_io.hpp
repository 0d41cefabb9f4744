#pragma once

#include <string>

#include <json.hpp>

#include "bels/ensemble.hpp"

namespace bels {

inline nlohmann::json config_to_json(const BelsConfig& c) {
    return nlohmann::json{
        {"n", c.n},
        {"m", c.m},
        {"g", c.g},
        {"h", c.h},
        {"chunk_size", c.chunk_size},
        {"m_o", c.m_o},
        {"m_p", c.m_p},
        {"eta", c.eta},
        {"delta_init", c.delta_init},
        {"lambda_ridge", c.lambda_ridge},
        {"rho", c.rho},
        {"admm_iters", c.admm_iters},
        {"kappa", c.kappa},
        {"enhancement_scale", c.enhancement_scale},
        {"seed", c.seed},
        {"variant", variant_name(c.variant)},
    };
}

inline BelsConfig config_from_json(const nlohmann::json& j) {
    BelsConfig c;
    c.n = j.value("n", c.n);
    c.m = j.value("m", c.m);
    c.g = j.value("g", c.g);
    c.h = j.value("h", c.h);
    c.chunk_size = j.value("chunk_size", c.chunk_size);
    c.m_o = j.value("m_o", c.m_o);
    c.m_p = j.value("m_p", c.m_p);
    c.eta = j.value("eta", c.eta);
    c.delta_init = j.value("delta_init", c.delta_init);
    c.lambda_ridge = j.value("lambda_ridge", c.lambda_ridge);
    c.rho = j.value("rho", c.rho);
    c.admm_iters = j.value("admm_iters", c.admm_iters);
    c.kappa = j.value("kappa", c.kappa);
    c.enhancement_scale = j.value("enhancement_scale", c.enhancement_scale);
    c.seed = j.value("seed", c.seed);
    if (j.contains("variant")) c.variant = variant_from_name(j.at("variant").get<std::string>());
    c.validate();
    return c;
}

}  // namespace bels
