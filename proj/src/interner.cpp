#include "arec/interner.hpp"

#include "arec/errors.hpp"

#include <algorithm>

namespace arec {

Interner Interner::sorted(std::vector<std::string> names) {
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    Interner out;
    out.names_.reserve(names.size());
    for (auto& n : names) out.intern(n);
    return out;
}

Index Interner::intern(std::string_view name) {
    if (auto it = index_.find(name); it != index_.end()) return it->second;
    const auto idx = static_cast<Index>(names_.size());
    names_.emplace_back(name);
    index_.emplace(names_.back(), idx);
    return idx;
}

std::optional<Index> Interner::find(std::string_view name) const {
    if (auto it = index_.find(name); it != index_.end()) return it->second;
    return std::nullopt;
}

Index Interner::at(std::string_view name) const {
    if (auto idx = find(name)) return *idx;
    throw NotFound("unknown identifier '" + std::string(name) + "'");
}

}  // namespace arec
