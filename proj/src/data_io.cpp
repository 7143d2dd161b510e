#include "cinn/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "cinn/rng.hpp"

namespace cinn {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first != last && *first == ' ') ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc())
    throw IoError("could not parse floating point value: '" + s + "'");
  return v;
}

void Dataset::validate() const {
  if (inputs.size() != labels.size())
    throw InvalidInput("Dataset: inputs/labels length mismatch");
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].size() != dim())
      throw InvalidInput("Dataset: inconsistent input dimension");
    if (labels[i] < 0) throw InvalidInput("Dataset: negative label");
  }
}

namespace {

class LineReader {
 public:
  LineReader(std::istream& in, const std::string& path) : in_(in), path_(path) {}

  bool next(std::vector<std::string>& tokens) {
    std::string line;
    while (std::getline(in_, line)) {
      ++lineno_;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      tokens.clear();
      std::istringstream ss(line);
      std::string tok;
      while (ss >> tok) tokens.push_back(tok);
      if (!tokens.empty()) return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw IoError(path_ + ":" + std::to_string(lineno_) + ": " + msg);
  }

  std::vector<std::string> expect(const std::string& key) {
    std::vector<std::string> tokens;
    if (!next(tokens)) fail("unexpected end of file, expected '" + key + "'");
    if (tokens[0] != key) fail("expected '" + key + "', found '" + tokens[0] + "'");
    return tokens;
  }

 private:
  std::istream& in_;
  std::string path_;
  long lineno_ = 0;
};

void write_matrix(std::ostream& out, const char* name, const Matrix& m) {
  out << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

void write_vector(std::ostream& out, const char* name, const Vector& v) {
  out << name << ' ' << v.size() << '\n';
  for (Index i = 0; i < v.size(); ++i) {
    if (i) out << ' ';
    out << format_double(v[i]);
  }
  out << '\n';
}

Matrix read_matrix(LineReader& reader, const std::string& key, Index rows,
                   Index cols) {
  const auto header = reader.expect(key);
  if (header.size() != 3) reader.fail(key + ": expected '" + key + " rows cols'");
  const long fr = std::stol(header[1]);
  const long fc = std::stol(header[2]);
  if (fr != rows || fc != cols)
    reader.fail(key + ": dimensions " + header[1] + "x" + header[2] +
                " do not match declared dims " + std::to_string(rows) + "x" +
                std::to_string(cols));
  Matrix m(rows, cols);
  std::vector<std::string> tokens;
  for (Index i = 0; i < rows; ++i) {
    if (!reader.next(tokens)) reader.fail(key + ": missing row data");
    if (static_cast<Index>(tokens.size()) != cols)
      reader.fail(key + ": expected " + std::to_string(cols) + " values");
    for (Index j = 0; j < cols; ++j) m(i, j) = parse_double(tokens[j]);
  }
  return m;
}

Vector read_vector(LineReader& reader, const std::string& key, Index size) {
  const auto header = reader.expect(key);
  if (header.size() != 2) reader.fail(key + ": expected '" + key + " size'");
  if (std::stol(header[1]) != size)
    reader.fail(key + ": size does not match declared dims");
  std::vector<std::string> tokens;
  if (!reader.next(tokens)) reader.fail(key + ": missing data");
  if (static_cast<Index>(tokens.size()) != size)
    reader.fail(key + ": expected " + std::to_string(size) + " values");
  Vector v(size);
  for (Index i = 0; i < size; ++i) v[i] = parse_double(tokens[i]);
  return v;
}

void write_model_common(std::ostream& out, Index n, Index r, Index q,
                        const Activation& act, double gamma) {
  out << "cinn-model v1\n";
  out << "n " << n << "\nr " << r << "\nq " << q << '\n';
  out << "activation " << act.name();
  if (act.kind == ActivationKind::leaky_relu)
    out << ' ' << format_double(act.slope);
  out << '\n';
  out << "gamma " << format_double(gamma) << '\n';
}

}  // namespace

ImplicitNetwork ModelFile::as_network() const {
  ImplicitNetwork net;
  if (form == ModelForm::materialized) {
    net.W = W;
  } else {
    const Vector e = has_eta() ? eta : Vector::Ones(n);
    net.W = parametrize_weight(T_raw, PositiveWeights(e), gamma);
  }
  net.U = U;
  net.b = b;
  net.C = C;
  net.c = c;
  net.activation = activation;
  net.validate();
  return net;
}

TrainableModel ModelFile::as_trainable() const {
  if (form != ModelForm::raw)
    throw IoError("model file is materialized; raw parameters unavailable");
  TrainableModel m;
  m.T_raw = T_raw;
  m.gamma = gamma;
  m.U = U;
  m.b = b;
  m.C = C;
  m.c = c;
  m.activation = activation;
  m.eta_cached = has_eta() ? eta : Vector::Ones(n);
  m.log_eta = m.eta_cached.array().log();
  m.validate();
  return m;
}

void save_model(const std::string& path, const TrainableModel& model) {
  model.validate();
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  write_model_common(out, model.n(), model.r(), model.q(), model.activation,
                     model.gamma);
  out << "form raw\n";
  write_vector(out, "eta", model.eta_cached);
  write_matrix(out, "T_raw", model.T_raw);
  write_matrix(out, "U", model.U);
  write_vector(out, "b", model.b);
  write_matrix(out, "C", model.C);
  write_vector(out, "c", model.c);
  if (!out) throw IoError("write failed: " + path);
}

void save_model(const std::string& path, const ImplicitNetwork& net,
                const Vector& eta, double gamma) {
  net.validate();
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  write_model_common(out, net.n(), net.r(), net.q(), net.activation, gamma);
  out << "form materialized\n";
  if (eta.size() > 0) {
    if (eta.size() != net.n())
      throw InvalidInput("save_model: eta dimension mismatch");
    write_vector(out, "eta", eta);
  }
  write_matrix(out, "W", net.W);
  write_matrix(out, "U", net.U);
  write_vector(out, "b", net.b);
  write_matrix(out, "C", net.C);
  write_vector(out, "c", net.c);
  if (!out) throw IoError("write failed: " + path);
}

ModelFile load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model file: " + path);
  LineReader reader(in, path);

  std::vector<std::string> tokens;
  if (!reader.next(tokens) || tokens.size() != 2 || tokens[0] != "cinn-model")
    throw IoError(path + ": not a cinn-model file");
  if (tokens[1] != "v1")
    throw IoError(path + ": unsupported schema version '" + tokens[1] + "'");

  ModelFile mf;
  mf.schema_version = 1;
  auto read_scalar = [&](const std::string& key) {
    const auto t = reader.expect(key);
    if (t.size() != 2) reader.fail(key + ": expected one value");
    return t[1];
  };
  mf.n = std::stol(read_scalar("n"));
  mf.r = std::stol(read_scalar("r"));
  mf.q = std::stol(read_scalar("q"));
  if (mf.n < 1 || mf.r < 1 || mf.q < 1)
    throw IoError(path + ": dims must be positive");

  const auto act_tokens = reader.expect("activation");
  if (act_tokens.size() == 2)
    mf.activation = activation_from_name(act_tokens[1]);
  else if (act_tokens.size() == 3)
    mf.activation = activation_from_name(act_tokens[1], parse_double(act_tokens[2]));
  else
    reader.fail("activation: expected name [slope]");

  mf.gamma = parse_double(read_scalar("gamma"));

  const auto form_tokens = reader.expect("form");
  if (form_tokens.size() != 2 ||
      (form_tokens[1] != "raw" && form_tokens[1] != "materialized"))
    reader.fail("form: expected 'raw' or 'materialized'");
  mf.form = form_tokens[1] == "raw" ? ModelForm::raw : ModelForm::materialized;

  // Optional eta block, then the weight blocks in fixed order.
  if (!reader.next(tokens)) reader.fail("unexpected end of file");
  if (tokens[0] == "eta") {
    if (tokens.size() != 2 || std::stol(tokens[1]) != mf.n)
      reader.fail("eta: size does not match n");
    std::vector<std::string> values;
    if (!reader.next(values)) reader.fail("eta: missing data");
    if (static_cast<Index>(values.size()) != mf.n)
      reader.fail("eta: wrong number of values");
    mf.eta = Vector(mf.n);
    for (Index i = 0; i < mf.n; ++i) mf.eta[i] = parse_double(values[i]);
    if (!reader.next(tokens)) reader.fail("unexpected end of file");
  } else if (mf.form == ModelForm::raw) {
    reader.fail("raw model files must carry an eta block");
  }

  const std::string weight_key = mf.form == ModelForm::raw ? "T_raw" : "W";
  if (tokens[0] != weight_key)
    reader.fail("expected '" + weight_key + "', found '" + tokens[0] + "'");
  if (tokens.size() != 3 || std::stol(tokens[1]) != mf.n ||
      std::stol(tokens[2]) != mf.n)
    reader.fail(weight_key + ": dimensions do not match declared n");
  Matrix wmat(mf.n, mf.n);
  for (Index i = 0; i < mf.n; ++i) {
    std::vector<std::string> values;
    if (!reader.next(values)) reader.fail(weight_key + ": missing row data");
    if (static_cast<Index>(values.size()) != mf.n)
      reader.fail(weight_key + ": wrong number of values in a row");
    for (Index j = 0; j < mf.n; ++j) wmat(i, j) = parse_double(values[j]);
  }
  if (mf.form == ModelForm::raw)
    mf.T_raw = std::move(wmat);
  else
    mf.W = std::move(wmat);

  mf.U = read_matrix(reader, "U", mf.n, mf.r);
  mf.b = read_vector(reader, "b", mf.n);
  mf.C = read_matrix(reader, "C", mf.q, mf.n);
  mf.c = read_vector(reader, "c", mf.q);
  return mf;
}

namespace {

std::uint32_t read_u32_be(std::istream& in, const std::string& path) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  if (!in) throw IoError(path + ": truncated header");
  return (static_cast<std::uint32_t>(bytes[0]) << 24) |
         (static_cast<std::uint32_t>(bytes[1]) << 16) |
         (static_cast<std::uint32_t>(bytes[2]) << 8) |
         static_cast<std::uint32_t>(bytes[3]);
}

}  // namespace

Dataset load_mnist_idx(const std::string& images_path,
                       const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw IoError("cannot open images file: " + images_path);
  const std::uint32_t img_magic = read_u32_be(img, images_path);
  if (img_magic != 0x00000803u)
    throw IoError(images_path + ": bad image magic " +
                  std::to_string(img_magic) + ", expected 2051");
  const std::uint32_t count = read_u32_be(img, images_path);
  const std::uint32_t rows = read_u32_be(img, images_path);
  const std::uint32_t cols = read_u32_be(img, images_path);

  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw IoError("cannot open labels file: " + labels_path);
  const std::uint32_t lab_magic = read_u32_be(lab, labels_path);
  if (lab_magic != 0x00000801u)
    throw IoError(labels_path + ": bad label magic " +
                  std::to_string(lab_magic) + ", expected 2049");
  const std::uint32_t lab_count = read_u32_be(lab, labels_path);
  if (lab_count != count)
    throw IoError("image/label count mismatch: " + std::to_string(count) +
                  " vs " + std::to_string(lab_count));

  const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
  Dataset ds;
  ds.name = "idx";
  ds.inputs.reserve(count);
  ds.labels.reserve(count);
  std::vector<unsigned char> buf(pixels);
  for (std::uint32_t i = 0; i < count; ++i) {
    img.read(reinterpret_cast<char*>(buf.data()),
             static_cast<std::streamsize>(pixels));
    if (!img) throw IoError(images_path + ": truncated image payload");
    Vector v(static_cast<Index>(pixels));
    for (std::size_t p = 0; p < pixels; ++p)
      v[static_cast<Index>(p)] = static_cast<double>(buf[p]) / 255.0;
    ds.inputs.push_back(std::move(v));
    char label = 0;
    lab.read(&label, 1);
    if (!lab) throw IoError(labels_path + ": truncated label payload");
    ds.labels.push_back(static_cast<int>(static_cast<unsigned char>(label)));
  }
  return ds;
}

Dataset synthetic_dataset(SyntheticKind kind, long count, std::uint64_t seed) {
  if (count < 2) throw InvalidInput("synthetic_dataset: count must be >= 2");
  Rng rng(seed);
  Dataset ds;
  ds.name = kind == SyntheticKind::two_moons_like ? "two_moons_like"
                                                  : "gaussian_blobs";
  ds.inputs.reserve(count);
  ds.labels.reserve(count);
  const double pi = 3.14159265358979323846;
  for (long i = 0; i < count; ++i) {
    const int label = static_cast<int>(i % 2);
    Vector x(2);
    if (kind == SyntheticKind::gaussian_blobs) {
      const double cx = label == 0 ? -2.0 : 2.0;
      x[0] = cx + 0.5 * rng.normal();
      x[1] = 0.0 + 0.5 * rng.normal();
    } else {
      const double t = pi * rng.uniform();
      if (label == 0) {
        x[0] = std::cos(t);
        x[1] = std::sin(t);
      } else {
        x[0] = 1.0 - std::cos(t);
        x[1] = 0.5 - std::sin(t);
      }
      x[0] += 0.1 * rng.normal();
      x[1] += 0.1 * rng.normal();
    }
    ds.inputs.push_back(std::move(x));
    ds.labels.push_back(label);
  }
  return ds;
}

void write_curves_csv(const std::string& path,
                      const std::vector<Curve>& curves) {
  struct Row {
    double eps;
    double fraction;
    std::string method;
    std::string model_id;
  };
  std::vector<Row> rows;
  for (const Curve& c : curves)
    for (const CurvePoint& p : c.points)
      rows.push_back({p.eps, p.fraction, c.method, c.model_id});
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.eps != b.eps) return a.eps < b.eps;
    if (a.method != b.method) return a.method < b.method;
    return a.model_id < b.model_id;
  });
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "eps,fraction,method,model_id\n";
  for (const Row& r : rows)
    out << format_double(r.eps) << ',' << format_double(r.fraction) << ','
        << r.method << ',' << r.model_id << '\n';
  if (!out) throw IoError("write failed: " + path);
}

void write_certificates_csv(const std::string& path,
                            const std::vector<Certificate>& certs) {
  std::vector<Certificate> sorted = certs;
  std::sort(sorted.begin(), sorted.end(),
            [](const Certificate& a, const Certificate& b) {
              if (a.eps != b.eps) return a.eps < b.eps;
              return a.sample_id < b.sample_id;
            });
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "sample_id,eps,method,predicted_label,margin,certified\n";
  for (const Certificate& c : sorted)
    out << c.sample_id << ',' << format_double(c.eps) << ','
        << cert_method_name(c.method) << ',' << c.predicted_label << ','
        << format_double(c.margin) << ',' << (c.certified ? 1 : 0) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

TrainFileConfig load_training_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  TrainFileConfig cfg;
  double leaky_slope = 0.01;
  std::string activation_name = "relu";

  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    std::string key, eq, value;
    if (!(ss >> key)) continue;
    if (!(ss >> eq >> value) || eq != "=")
      throw IoError(path + ":" + std::to_string(lineno) +
                    ": expected 'key = value'");
    if (key == "algo") {
      if (value == "lipschitz")
        cfg.train.algo = TrainAlgo::lipschitz;
      else if (value == "inclusion")
        cfg.train.algo = TrainAlgo::inclusion;
      else
        throw IoError(path + ": unknown algo '" + value + "'");
    } else if (key == "lambda") {
      cfg.train.lambda = parse_double(value);
    } else if (key == "kappa_nom") {
      cfg.train.kappa_nom = parse_double(value);
    } else if (key == "eps_test") {
      cfg.train.eps_test = parse_double(value);
    } else if (key == "ramp_start") {
      cfg.train.ramp_start = std::stoi(value);
    } else if (key == "ramp_end") {
      cfg.train.ramp_end = std::stoi(value);
    } else if (key == "epochs") {
      cfg.train.epochs = std::stoi(value);
    } else if (key == "batch_size") {
      cfg.train.batch_size = std::stoi(value);
    } else if (key == "learning_rate") {
      cfg.train.learning_rate = parse_double(value);
    } else if (key == "lr_drop_epoch") {
      cfg.train.lr_drop_epoch = std::stoi(value);
    } else if (key == "lr_drop_rate") {
      cfg.train.lr_drop_rate = parse_double(value);
    } else if (key == "seed") {
      cfg.train.seed = static_cast<std::uint64_t>(std::stoull(value));
    } else if (key == "eta_trainable") {
      cfg.train.eta_trainable = value == "true" || value == "1";
    } else if (key == "solve_tol") {
      cfg.train.solve_tol = parse_double(value);
    } else if (key == "n") {
      cfg.n = std::stol(value);
    } else if (key == "gamma") {
      cfg.gamma = parse_double(value);
    } else if (key == "activation") {
      activation_name = value;
    } else if (key == "leaky_slope") {
      leaky_slope = parse_double(value);
    } else if (key == "dataset") {
      cfg.dataset = value;
    } else {
      throw IoError(path + ":" + std::to_string(lineno) + ": unknown key '" +
                    key + "'");
    }
  }
  cfg.activation = activation_from_name(activation_name, leaky_slope);
  return cfg;
}

Dataset load_dataset_spec(const std::string& spec) {
  const auto split = [](const std::string& s) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
      const auto pos = s.find(':', start);
      if (pos == std::string::npos) {
        parts.push_back(s.substr(start));
        break;
      }
      parts.push_back(s.substr(start, pos - start));
      start = pos + 1;
    }
    return parts;
  };
  const auto parts = split(spec);
  if (parts.empty()) throw InvalidInput("empty dataset spec");
  if (parts[0] == "idx") {
    if (parts.size() != 3)
      throw InvalidInput("idx spec must be idx:<images>:<labels>");
    return load_mnist_idx(parts[1], parts[2]);
  }
  if (parts[0] == "synthetic") {
    if (parts.size() != 4)
      throw InvalidInput("synthetic spec must be synthetic:<kind>:<count>:<seed>");
    SyntheticKind kind;
    if (parts[1] == "two_moons_like")
      kind = SyntheticKind::two_moons_like;
    else if (parts[1] == "gaussian_blobs")
      kind = SyntheticKind::gaussian_blobs;
    else
      throw InvalidInput("unknown synthetic kind '" + parts[1] + "'");
    return synthetic_dataset(kind, std::stol(parts[2]),
                             static_cast<std::uint64_t>(std::stoull(parts[3])));
  }
  throw InvalidInput("unknown dataset spec '" + spec + "'");
}

}  // namespace cinn
