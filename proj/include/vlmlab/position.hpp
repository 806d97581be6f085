#pragma once

#include <string>
#include <vector>

#include "vlmlab/errors.hpp"

namespace vlmlab {

// Span lengths of a multimodal token sequence: system prompt, then exactly
// one image span, then user prompt. Multi-image or interleaved inputs are not
// representable by design; anything that needs them must fail before reaching
// the schemes below.
struct ModalityLayout {
    int system_len = 0;  // may be empty
    int image_len = 0;   // >= 1
    int user_len = 0;    // >= 1

    int total() const { return system_len + image_len + user_len; }

    void validate() const {
        if (system_len < 0)
            throw ConfigError("layout: system_len must be >= 0, got " + std::to_string(system_len));
        if (image_len < 1)
            throw ConfigError("layout: image_len must be >= 1, got " + std::to_string(image_len));
        if (user_len < 1)
            throw ConfigError("layout: user_len must be >= 1, got " + std::to_string(user_len));
    }
};

// Per-token position ids, length layout.total(). Non-decreasing; text spans
// strictly increasing.
using PositionIds = std::vector<int>;

enum class SchemeId {
    sequential,  // raster assignment: one distinct consecutive id per token
    bapa,        // balanced assignment: all image tokens share one id
};

// Parses a CLI/config scheme name ("sequential" | "bapa").
SchemeId scheme_from_string(const std::string& name);
std::string to_string(SchemeId id);

// ids = 0, 1, ..., total-1.
PositionIds assign_sequential(const ModalityLayout& layout);

// System ids 0..i-1, all image tokens share id i, user ids continue at i+1.
// The shared image id keeps the overall assignment continuous: it equals the
// id the first image token would have had under sequential assignment.
PositionIds assign_bapa(const ModalityLayout& layout);

using AssignFn = PositionIds (*)(const ModalityLayout&);

// Registry lookup; the two names above are the only registered schemes.
AssignFn scheme_for(SchemeId id);

}  // namespace vlmlab
