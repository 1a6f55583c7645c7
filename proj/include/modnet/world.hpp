#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "modnet/errors.hpp"
#include "modnet/tensor.hpp"

namespace modnet {

// One environment: an ordered entity list plus named feature views. Every
// view is a d_view x n matrix whose column k describes entity k, so all
// views share the entity count and ordering. lookup_index maps the lexemes
// the lookup module may receive to entity positions.
struct World {
  std::string id;
  std::vector<std::string> entities;
  std::map<std::string, Tensor> views;
  std::map<std::string, int> lookup_index;

  int entity_count() const { return static_cast<int>(entities.size()); }

  const Tensor& view(const std::string& name) const {
    auto it = views.find(name);
    if (it == views.end())
      throw SchemaError("world '" + id + "' has no view '" + name + "'");
    return it->second;
  }

  void validate() const {
    const int n = entity_count();
    if (n == 0) throw SchemaError("world '" + id + "' has no entities");
    std::set<std::string> seen;
    for (const std::string& e : entities)
      if (!seen.insert(e).second)
        throw SchemaError("world '" + id + "' has duplicate entity '" + e + "'");
    for (const auto& [name, m] : views) {
      if (m.rank() != 2)
        throw SchemaError("world '" + id + "' view '" + name +
                          "' is not a matrix: " + m.shape_str());
      if (m.cols() != n)
        throw SchemaError("world '" + id + "' view '" + name + "' has " +
                          std::to_string(m.cols()) + " columns for " +
                          std::to_string(n) + " entities");
      if (!m.all_finite())
        throw SchemaError("world '" + id + "' view '" + name +
                          "' has non-finite values");
    }
    for (const auto& [lex, pos] : lookup_index)
      if (pos < 0 || pos >= n)
        throw SchemaError("world '" + id + "' lookup_index['" + lex +
                          "'] = " + std::to_string(pos) + " out of range");
  }
};

}  // namespace modnet
