#pragma once

#include <map>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "afd/params.hpp"

namespace afd {

// Versioned binary checkpoint container: a JSON metadata blob plus any number
// of named ParamStores. Doubles are written raw (little-endian), so a
// save/load round trip is bit-exact.
struct Checkpoint {
    static constexpr char kMagic[9] = "AFDCKPT1";

    std::string meta_json;  // serialized JSON object
    std::map<std::string, ParamStore> stores;

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);
};

}  // namespace afd
