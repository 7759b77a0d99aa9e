#include <fmt/format.h>

#include <cstdint>
#include <fstream>

#include <nlohmann/json.hpp>

#include "dprom/tensors.hpp"

namespace dprom {

namespace {

constexpr char kMagic[9] = "DPROMT01";

void put_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

void put_block(std::ostream& out, const std::vector<int>& dims,
               const VecX& data) {
  put_u32(out, static_cast<std::uint32_t>(dims.size()));
  long n = 1;
  for (int d : dims) {
    put_u32(out, static_cast<std::uint32_t>(d));
    n *= d;
  }
  if (n != data.size()) throw IoError("tensor block shape mismatch on write");
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(sizeof(double)) * data.size());
}

VecX get_block(std::istream& in, std::vector<int>* dims_out) {
  const std::uint32_t rank = get_u32(in);
  if (rank > 6) throw IoError("corrupt tensor block (rank)");
  long n = 1;
  std::vector<int> dims;
  for (std::uint32_t r = 0; r < rank; ++r) {
    dims.push_back(static_cast<int>(get_u32(in)));
    n *= dims.back();
  }
  VecX data(n);
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(sizeof(double)) * n);
  if (!in) throw IoError("corrupt tensor block (data)");
  if (dims_out) *dims_out = dims;
  return data;
}

void put_qset(std::ostream& out, const QSet& q, int m, int md) {
  put_block(out, {m, m}, Eigen::Map<const VecX>(q.Q2n.data(), q.Q2n.size()));
  put_block(out, {m, m, md}, q.Q3d.v);
  put_block(out, {m, m, md, md}, q.Q4dd.v);
  put_block(out, {m, m, m}, q.Q3n.v);
  put_block(out, {m, m, m, md}, q.Q4d.v);
  put_block(out, {m, m, m, md, md}, q.Q5dd.v);
  put_block(out, {m, m, m, m}, q.Q4n.v);
  put_block(out, {m, m, m, m, md}, q.Q5d.v);
  put_block(out, {m, m, m, m, md, md}, q.Q6dd.v);
}

void get_qset(std::istream& in, int m, int md, QSet& q) {
  q.resize(m, md);
  std::vector<int> dims;
  VecX b = get_block(in, &dims);
  Eigen::Map<VecX>(q.Q2n.data(), q.Q2n.size()) = b;
  q.Q3d.v = get_block(in, nullptr);
  q.Q4dd.v = get_block(in, nullptr);
  q.Q3n.v = get_block(in, nullptr);
  q.Q4d.v = get_block(in, nullptr);
  q.Q5dd.v = get_block(in, nullptr);
  q.Q4n.v = get_block(in, nullptr);
  q.Q5d.v = get_block(in, nullptr);
  q.Q6dd.v = get_block(in, nullptr);
}

}  // namespace

void save_tensors(const DpROMTensors& T, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write snapshot '{}'", path));
  out.write(kMagic, 8);

  nlohmann::json man;
  man["model"] = to_string(T.spec);
  man["m"] = T.m;
  man["md"] = T.md;
  man["labels"] = T.basis_labels;
  man["mesh"] = T.mesh_tag;
  man["vol_skipped"] = T.vol_skipped;
  const std::string ms = man.dump();
  put_u32(out, static_cast<std::uint32_t>(ms.size()));
  out.write(ms.data(), static_cast<std::streamsize>(ms.size()));

  put_qset(out, T.base, T.m, T.md);
  if (T.spec.volume_correction)
    for (const auto& q : T.vol) put_qset(out, q, T.m, T.md);
  if (!out) throw IoError(fmt::format("write failed for snapshot '{}'", path));

  std::ofstream side(path + ".manifest");
  side << "dprom tensor snapshot\n";
  side << "model " << to_string(T.spec) << "\n";
  side << "modes " << T.m << "\n";
  side << "defects " << T.md << "\n";
  side << "mesh " << T.mesh_tag << "\n";
  side << "labels";
  for (const auto& l : T.basis_labels) side << " " << l;
  side << "\n";
}

DpROMTensors load_tensors(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open snapshot '{}'", path));
  char magic[8];
  in.read(magic, 8);
  if (!in || std::string(magic, 8) != std::string(kMagic, 8))
    throw IoError(fmt::format("'{}' is not a tensor snapshot", path));
  const std::uint32_t mlen = get_u32(in);
  std::string ms(mlen, '\0');
  in.read(ms.data(), mlen);
  if (!in) throw IoError("corrupt snapshot manifest");
  const auto man = nlohmann::json::parse(ms);

  DpROMTensors T;
  T.spec = parse_model_spec(man.at("model").get<std::string>());
  T.m = man.at("m").get<int>();
  T.md = man.at("md").get<int>();
  T.basis_labels = man.at("labels").get<std::vector<std::string>>();
  T.mesh_tag = man.at("mesh").get<std::string>();
  T.vol_skipped = man.at("vol_skipped").get<std::vector<bool>>();

  get_qset(in, T.m, T.md, T.base);
  if (T.spec.volume_correction) {
    T.vol.resize(T.md);
    for (int i = 0; i < T.md; ++i) get_qset(in, T.m, T.md, T.vol[i]);
  }
  return T;
}

}  // namespace dprom
