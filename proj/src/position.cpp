#include "vlmlab/position.hpp"

namespace vlmlab {

SchemeId scheme_from_string(const std::string& name) {
    if (name == "sequential") return SchemeId::sequential;
    if (name == "bapa") return SchemeId::bapa;
    throw ConfigError("unknown position scheme \"" + name + "\" (expected \"sequential\" or \"bapa\")");
}

std::string to_string(SchemeId id) {
    switch (id) {
        case SchemeId::sequential: return "sequential";
        case SchemeId::bapa: return "bapa";
    }
    throw ConfigError("invalid scheme id");
}

PositionIds assign_sequential(const ModalityLayout& layout) {
    layout.validate();
    PositionIds ids(static_cast<size_t>(layout.total()));
    for (int t = 0; t < layout.total(); ++t) ids[static_cast<size_t>(t)] = t;
    return ids;
}

PositionIds assign_bapa(const ModalityLayout& layout) {
    layout.validate();
    PositionIds ids;
    ids.reserve(static_cast<size_t>(layout.total()));
    const int i = layout.system_len;
    for (int t = 0; t < i; ++t) ids.push_back(t);
    for (int t = 0; t < layout.image_len; ++t) ids.push_back(i);
    // k consecutive user ids starting right after the shared image id.
    for (int t = 0; t < layout.user_len; ++t) ids.push_back(i + 1 + t);
    return ids;
}

AssignFn scheme_for(SchemeId id) {
    switch (id) {
        case SchemeId::sequential: return &assign_sequential;
        case SchemeId::bapa: return &assign_bapa;
    }
    throw ConfigError("invalid scheme id");
}

}  // namespace vlmlab
