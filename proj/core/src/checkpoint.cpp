#include "seriate/checkpoint.hpp"

#include <bit>
#include <cstring>

namespace seriate {

namespace {

constexpr char kMagic[8] = {'S', 'E', 'R', 'M', 'O', 'D', 'L', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

void put_matrix(std::string& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) put_f64(out, m(r, c));
}

void put_vector(std::string& out, const Eigen::VectorXd& v) {
  for (Eigen::Index r = 0; r < v.rows(); ++r) put_f64(out, v(r));
}

class Cursor {
public:
  explicit Cursor(const std::string& data) : data_(data) {}

  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(byte()) << (8 * i);
    return v;
  }

  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(byte()) << (8 * i);
    return v;
  }

  double f64() { return std::bit_cast<double>(u64()); }

  std::string bytes(std::size_t n) {
    require(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void matrix(Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = f64();
  }

  void vector(Eigen::VectorXd& v) {
    for (Eigen::Index r = 0; r < v.rows(); ++r) v(r) = f64();
  }

  bool done() const { return pos_ == data_.size(); }

private:
  unsigned char byte() {
    require(1);
    return static_cast<unsigned char>(data_[pos_++]);
  }
  void require(std::size_t n) const {
    if (pos_ + n > data_.size()) throw Error("truncated checkpoint file");
  }

  const std::string& data_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const ModelParams& p = ckpt.params;
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put_u32(out, kVersion);
  put_u32(out, ckpt.opt ? 1u : 0u);
  put_u64(out, p.hidden_dim);
  put_u64(out, p.alphabet_size);
  put_u64(out, p.mixture_components);
  put_u32(out, static_cast<std::uint32_t>(p.cell_kind));
  put_u32(out, static_cast<std::uint32_t>(p.head_kind));
  put_u64(out, p.target_dim);
  put_f64(out, p.value_affine.mean);
  put_f64(out, p.value_affine.stddev);

  const std::string schema = schema_to_json(ckpt.schema);
  put_u64(out, schema.size());
  out.append(schema);

  put_matrix(out, p.w_in);
  put_matrix(out, p.w_rec);
  if (p.cell_kind == CellKind::Gru) {
    put_matrix(out, p.w_in_z);
    put_matrix(out, p.w_rec_z);
    put_matrix(out, p.w_in_r);
    put_matrix(out, p.w_rec_r);
  }
  put_matrix(out, p.w_sym);
  put_vector(out, p.b_sym);
  put_matrix(out, p.w_mix);
  put_vector(out, p.b_mix);
  if (p.head_kind != HeadKind::None) {
    put_matrix(out, p.w_head);
    put_vector(out, p.b_head);
  }

  if (ckpt.opt) {
    put_u64(out, ckpt.opt->step);
    put_vector(out, ckpt.opt->m);
    put_vector(out, ckpt.opt->v);
  }
  atomic_write_file(path, out);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  if (data.size() < sizeof(kMagic) || std::memcmp(data.data(), kMagic, sizeof(kMagic)) != 0)
    throw Error("not a model checkpoint: " + path.string());
  Cursor cur(data);
  cur.bytes(sizeof(kMagic));
  const std::uint32_t version = cur.u32();
  if (version != kVersion)
    throw Error("unsupported checkpoint version " + std::to_string(version) +
                " (reader supports " + std::to_string(kVersion) + ")");
  const std::uint32_t flags = cur.u32();

  Checkpoint ckpt;
  ModelParams& p = ckpt.params;
  p.hidden_dim = cur.u64();
  p.alphabet_size = cur.u64();
  p.mixture_components = cur.u64();
  p.cell_kind = static_cast<CellKind>(cur.u32());
  p.head_kind = static_cast<HeadKind>(cur.u32());
  p.target_dim = cur.u64();
  p.value_affine.mean = cur.f64();
  p.value_affine.stddev = cur.f64();

  const std::uint64_t schema_len = cur.u64();
  ckpt.schema = schema_from_json(cur.bytes(schema_len));

  const auto H = static_cast<Eigen::Index>(p.hidden_dim);
  const auto V = static_cast<Eigen::Index>(p.alphabet_size);
  const auto M3 = static_cast<Eigen::Index>(3 * p.mixture_components);
  p.w_in.resize(H, V + 1);
  p.w_rec.resize(H, H);
  p.w_sym.resize(V, H);
  p.b_sym.resize(V);
  p.w_mix.resize(M3, H);
  p.b_mix.resize(M3);
  cur.matrix(p.w_in);
  cur.matrix(p.w_rec);
  if (p.cell_kind == CellKind::Gru) {
    p.w_in_z.resize(H, V + 1);
    p.w_rec_z.resize(H, H);
    p.w_in_r.resize(H, V + 1);
    p.w_rec_r.resize(H, H);
    cur.matrix(p.w_in_z);
    cur.matrix(p.w_rec_z);
    cur.matrix(p.w_in_r);
    cur.matrix(p.w_rec_r);
  }
  cur.matrix(p.w_sym);
  cur.vector(p.b_sym);
  cur.matrix(p.w_mix);
  cur.vector(p.b_mix);
  if (p.head_kind != HeadKind::None) {
    const auto rows = p.head_kind == HeadKind::Classification
                          ? static_cast<Eigen::Index>(p.target_dim)
                          : M3;
    p.w_head.resize(rows, H);
    p.b_head.resize(rows);
    cur.matrix(p.w_head);
    cur.vector(p.b_head);
  }

  if (flags & 1u) {
    AdamState opt = AdamState::zero(p.flat_size());
    opt.step = cur.u64();
    cur.vector(opt.m);
    cur.vector(opt.v);
    ckpt.opt = std::move(opt);
  }
  if (!cur.done()) throw Error("trailing bytes in checkpoint file");
  return ckpt;
}

}  // namespace seriate
