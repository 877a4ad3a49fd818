#include "fermidyn/serialize.hpp"

#include <string>

namespace fermidyn {

using nlohmann::json;

namespace {

void require_kind(const json& j, const char* kind) {
  if (!j.is_object() || j.value("schema", "") != kSchema) throw ConfigError("expected schema " + std::string(kSchema));
  if (j.value("kind", "") != kind) throw ConfigError("expected kind " + std::string(kind));
}

FockSpacePtr space_for(const json& j, FockSpacePtr space) {
  const int modes = j.at("modes").get<int>();
  const int nmax = j.at("nmax").get<int>();
  if (!space) return make_fock_space(modes, nmax);
  if (space->modes() != modes || space->nmax() != nmax) {
    throw ShapeError("serialized operator lives on M=" + std::to_string(modes) + ", nmax=" + std::to_string(nmax));
  }
  return space;
}

template <class Fn>
auto guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed fermidyn json: ") + e.what());
  }
}

}  // namespace

json block_to_json(const Block& b) {
  json entries = json::array();
  b.for_each_nonzero([&](Index i, Index j, Complex v) { entries.push_back({i, j, v.real(), v.imag()}); });
  return {{"rows", b.rows()}, {"cols", b.cols()}, {"entries", std::move(entries)}};
}

Block block_from_json(const json& j) {
  return guarded([&] {
    const Index rows = j.at("rows").get<Index>();
    const Index cols = j.at("cols").get<Index>();
    std::vector<Triplet> triplets;
    for (const auto& e : j.at("entries")) {
      const Index r = e.at(0).get<Index>();
      const Index c = e.at(1).get<Index>();
      if (r < 0 || r >= rows || c < 0 || c >= cols) throw ConfigError("block entry out of range");
      triplets.emplace_back(r, c, Complex(e.at(2).get<double>(), e.at(3).get<double>()));
    }
    return Block::from_triplets(rows, cols, triplets);
  });
}

json to_json(const FockOperator& a) {
  json blocks = json::array();
  for (int n = 0; n <= a.space().nmax(); ++n) {
    if (!a.has_block(n)) continue;
    json b = block_to_json(a.block(n));
    b["source"] = n;
    blocks.push_back(std::move(b));
  }
  return {{"schema", kSchema},       {"kind", "fock_operator"}, {"modes", a.space().modes()},
          {"nmax", a.space().nmax()}, {"grade", a.grade()},      {"blocks", std::move(blocks)}};
}

FockOperator operator_from_json(const json& j, FockSpacePtr space) {
  return guarded([&] {
    require_kind(j, "fock_operator");
    space = space_for(j, std::move(space));
    FockOperator out(space, j.at("grade").get<int>());
    for (const auto& b : j.at("blocks")) {
      const int n = b.at("source").get<int>();
      if (!out.in_range(n)) throw ConfigError("block source sector " + std::to_string(n) + " out of range");
      Block blk = block_from_json(b);
      if (blk.rows() != space->dim(n + out.grade()) || blk.cols() != space->dim(n)) {
        throw ShapeError("block shape does not match sector " + std::to_string(n));
      }
      out.set_block(n, std::move(blk));
    }
    return out;
  });
}

json to_json(const SectorDecomposition& d) {
  json comps = json::array();
  for (int m = 0; m <= d.level(); ++m) {
    const Matrix& c = d.component(m);
    if (c.size() == 0 || c.isZero(0.0)) continue;
    json e = block_to_json(Block(c));
    e["m"] = m;
    comps.push_back(std::move(e));
  }
  return {{"schema", kSchema},
          {"kind", "sector_decomposition"},
          {"modes", d.space().modes()},
          {"nmax", d.space().nmax()},
          {"level", d.level()},
          {"convention", to_string(d.convention())},
          {"components", std::move(comps)}};
}

SectorDecomposition decomposition_from_json(const json& j, FockSpacePtr space) {
  return guarded([&] {
    require_kind(j, "sector_decomposition");
    space = space_for(j, std::move(space));
    SectorDecomposition d(space, j.at("level").get<int>(), parse_convention(j.at("convention").get<std::string>()));
    for (const auto& c : j.at("components")) d.set_component(c.at("m").get<int>(), block_from_json(c).to_dense());
    return d;
  });
}

}  // namespace fermidyn
