#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "autodiff.hpp"
#include "errors.hpp"
#include "layout.hpp"

namespace layoutforge {

inline constexpr double kDefaultPenaltyConstant = 10000.0;

enum class ConstraintType { min_size, equal_size, group_adjacency, alignment };

inline ConstraintType parse_constraint_type(const std::string& s) {
  if (s == "min-size") return ConstraintType::min_size;
  if (s == "equal-size") return ConstraintType::equal_size;
  if (s == "group-adjacency") return ConstraintType::group_adjacency;
  if (s == "alignment") return ConstraintType::alignment;
  throw SchemaError("unknown constraint type: " + s);
}

inline std::string to_string(ConstraintType t) {
  switch (t) {
    case ConstraintType::min_size: return "min-size";
    case ConstraintType::equal_size: return "equal-size";
    case ConstraintType::group_adjacency: return "group-adjacency";
    case ConstraintType::alignment: return "alignment";
  }
  return "?";
}

// Parameters by type:
//   min-size         ids [a]     min_w, min_h
//   equal-size       ids [a, b]
//   group-adjacency  ids [a, b]  gap_max, axis (0 = side by side, 1 = stacked)
//   alignment        ids [a, ...] edge (0 cx, 1 cy, 2 left, 3 right, 4 top, 5 bottom)
struct Constraint {
  ConstraintType type = ConstraintType::min_size;
  std::vector<std::string> ids;
  std::map<std::string, double> params;
  double constant = kDefaultPenaltyConstant;

  double param(const std::string& key, double fallback = 0.0) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  }
};

struct PenaltyConfig {
  double overlap_constant = kDefaultPenaltyConstant;
  double boundary_constant = kDefaultPenaltyConstant;
  std::vector<Constraint> constraints;
};

inline nlohmann::json to_json(const PenaltyConfig& c) {
  nlohmann::json cons = nlohmann::json::array();
  for (const auto& k : c.constraints)
    cons.push_back({{"type", to_string(k.type)}, {"ids", k.ids}, {"params", k.params}, {"constant", k.constant}});
  return {{"overlap_constant", c.overlap_constant}, {"boundary_constant", c.boundary_constant}, {"constraints", cons}};
}

inline PenaltyConfig penalty_config_from_json(const nlohmann::json& j) {
  PenaltyConfig c;
  try {
    c.overlap_constant = j.value("overlap_constant", kDefaultPenaltyConstant);
    c.boundary_constant = j.value("boundary_constant", kDefaultPenaltyConstant);
    for (const auto& k : j.value("constraints", nlohmann::json::array())) {
      Constraint con;
      con.type = parse_constraint_type(k.at("type").get<std::string>());
      con.ids = k.at("ids").get<std::vector<std::string>>();
      if (k.contains("params")) con.params = k.at("params").get<std::map<std::string, double>>();
      con.constant = k.value("constant", kDefaultPenaltyConstant);
      if (con.constant < 0.0) throw SchemaError("constraint constant must be >= 0");
      c.constraints.push_back(std::move(con));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw SchemaError(std::string("bad constraints: ") + ex.what());
  }
  if (c.overlap_constant < 0.0 || c.boundary_constant < 0.0) throw SchemaError("penalty constants must be >= 0");
  return c;
}

// Top-level blocks as 4x1 tape leaves [cx, cy, w, h].
struct BlockVars {
  std::vector<BlockRef> blocks;
  std::vector<ad::Var> vars;
  std::map<std::string, std::size_t> by_id;

  static BlockVars bind(ad::Tape& tape, const Layout& l, bool requires_grad = true) {
    BlockVars b;
    b.blocks = top_level_blocks(l);
    for (std::size_t i = 0; i < b.blocks.size(); ++i) {
      const Rect& r = block_rect(l, b.blocks[i]);
      ad::Matrix m(4, 1);
      m << r.cx, r.cy, r.w, r.h;
      b.vars.push_back(tape.leaf(std::move(m), requires_grad));
      b.by_id[block_id(l, b.blocks[i])] = i;
    }
    return b;
  }

  const ad::Var& at(const std::string& id) const {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw UnknownConstraintTarget("constraint target is not a top-level block: " + id);
    return vars[it->second];
  }
};

namespace detail {

struct Edges {
  ad::Var cx, cy, w, h, left, right, top, bottom;
};

inline Edges edges(const ad::Var& v) {
  Edges e{ad::slice(v, 0, 1), ad::slice(v, 1, 1), ad::slice(v, 2, 1), ad::slice(v, 3, 1), {}, {}, {}, {}};
  e.left = ad::sub(e.cx, ad::scale(e.w, 0.5));
  e.right = ad::add(e.cx, ad::scale(e.w, 0.5));
  e.top = ad::sub(e.cy, ad::scale(e.h, 0.5));
  e.bottom = ad::add(e.cy, ad::scale(e.h, 0.5));
  return e;
}

inline ad::Var edge_by_index(const Edges& e, int k) {
  switch (k) {
    case 0: return e.cx;
    case 1: return e.cy;
    case 2: return e.left;
    case 3: return e.right;
    case 4: return e.top;
    case 5: return e.bottom;
  }
  throw SchemaError("alignment edge must be in 0..5");
}

inline ad::Var accumulate(ad::Tape& tape, const std::vector<ad::Var>& terms) {
  if (terms.empty()) return tape.scalar(0.0);
  ad::Var s = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) s = ad::add(s, terms[i]);
  return s;
}

}  // namespace detail

// Sum over unordered block pairs of ReLU(x overlap) * ReLU(y overlap).
inline ad::Var penalty_overlap(ad::Tape& tape, const BlockVars& b) {
  std::vector<detail::Edges> e;
  for (const auto& v : b.vars) e.push_back(detail::edges(v));
  std::vector<ad::Var> terms;
  for (std::size_t i = 0; i < e.size(); ++i) {
    for (std::size_t j = i + 1; j < e.size(); ++j) {
      const ad::Var ox = ad::relu(ad::sub(ad::minimum(e[i].right, e[j].right), ad::maximum(e[i].left, e[j].left)));
      const ad::Var oy = ad::relu(ad::sub(ad::minimum(e[i].bottom, e[j].bottom), ad::maximum(e[i].top, e[j].top)));
      terms.push_back(ad::mul(ox, oy));
    }
  }
  return detail::accumulate(tape, terms);
}

inline ad::Var penalty_boundary(ad::Tape& tape, const BlockVars& b) {
  std::vector<ad::Var> terms;
  for (const auto& v : b.vars) {
    const auto e = detail::edges(v);
    terms.push_back(ad::relu(ad::scale(e.left, -1.0)));
    terms.push_back(ad::relu(ad::add_scalar(e.right, -1.0)));
    terms.push_back(ad::relu(ad::scale(e.top, -1.0)));
    terms.push_back(ad::relu(ad::add_scalar(e.bottom, -1.0)));
  }
  return detail::accumulate(tape, terms);
}

inline ad::Var constraint_penalty(ad::Tape& tape, const BlockVars& b, const Constraint& c) {
  auto need = [&](std::size_t n) {
    if (c.ids.size() < n) throw SchemaError(to_string(c.type) + " needs " + std::to_string(n) + " ids");
  };
  switch (c.type) {
    case ConstraintType::min_size: {
      need(1);
      const auto e = detail::edges(b.at(c.ids[0]));
      return ad::add(ad::relu(ad::add_scalar(ad::scale(e.w, -1.0), c.param("min_w"))),
                     ad::relu(ad::add_scalar(ad::scale(e.h, -1.0), c.param("min_h"))));
    }
    case ConstraintType::equal_size: {
      need(2);
      const auto a = detail::edges(b.at(c.ids[0]));
      const auto o = detail::edges(b.at(c.ids[1]));
      return ad::add(ad::square(ad::sub(a.w, o.w)), ad::square(ad::sub(a.h, o.h)));
    }
    case ConstraintType::group_adjacency: {
      need(2);
      const auto a = detail::edges(b.at(c.ids[0]));
      const auto o = detail::edges(b.at(c.ids[1]));
      const bool stacked = c.param("axis") != 0.0;
      const ad::Var gap = stacked ? ad::maximum(ad::sub(o.top, a.bottom), ad::sub(a.top, o.bottom))
                                  : ad::maximum(ad::sub(o.left, a.right), ad::sub(a.left, o.right));
      const ad::Var aligned = stacked ? ad::sub(a.cx, o.cx) : ad::sub(a.cy, o.cy);
      const ad::Var side = stacked ? ad::sub(a.w, o.w) : ad::sub(a.h, o.h);
      return ad::add(ad::add(ad::relu(ad::add_scalar(gap, -c.param("gap_max"))), ad::square(aligned)),
                     ad::square(side));
    }
    case ConstraintType::alignment: {
      need(2);
      const int k = static_cast<int>(c.param("edge"));
      const ad::Var ref = detail::edge_by_index(detail::edges(b.at(c.ids[0])), k);
      std::vector<ad::Var> terms;
      for (std::size_t i = 1; i < c.ids.size(); ++i)
        terms.push_back(ad::square(ad::sub(detail::edge_by_index(detail::edges(b.at(c.ids[i])), k), ref)));
      return detail::accumulate(tape, terms);
    }
  }
  throw SchemaError("unhandled constraint type");
}

// Weighted sum of the constraint list (each term times its own constant).
inline ad::Var penalty_constraints(ad::Tape& tape, const BlockVars& b, const PenaltyConfig& cfg) {
  std::vector<ad::Var> terms;
  for (const auto& c : cfg.constraints) terms.push_back(ad::scale(constraint_penalty(tape, b, c), c.constant));
  return detail::accumulate(tape, terms);
}

// Minimum-size floors at every top-level block's current extents, so the
// optimizer may grow blocks but not shrink them.
inline std::vector<Constraint> size_floor_constraints(const Layout& l, double constant = kDefaultPenaltyConstant) {
  std::vector<Constraint> out;
  for (auto b : top_level_blocks(l)) {
    const Rect& r = block_rect(l, b);
    out.push_back({ConstraintType::min_size, {block_id(l, b)}, {{"min_w", r.w}, {"min_h", r.h}}, constant});
  }
  return out;
}

struct PenaltyValues {
  double overlap = 0.0;
  double boundary = 0.0;
  double constraints = 0.0;  // already weighted

  // Weighted sum of all terms.
  double weighted(const PenaltyConfig& c) const {
    return c.overlap_constant * overlap + c.boundary_constant * boundary + constraints;
  }
};

inline PenaltyValues penalty_values(const Layout& l, const PenaltyConfig& cfg) {
  ad::Tape tape;
  const BlockVars b = BlockVars::bind(tape, l, false);
  return {penalty_overlap(tape, b).scalar(), penalty_boundary(tape, b).scalar(),
          penalty_constraints(tape, b, cfg).scalar()};
}

inline double penalty_overlap(const Layout& l) { return penalty_values(l, {}).overlap; }
inline double penalty_boundary(const Layout& l) { return penalty_values(l, {}).boundary; }

}  // namespace layoutforge
