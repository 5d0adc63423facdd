// GTSNE1 text checkpoint:
//
//   GTSNE1
//   input_dim <n> hidden_dim <h> layers <L>
//   tensor <name> <rows> <cols>
//   <rows lines of <cols> space-separated values, %.17g>
//   ...
//   end

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "graphtsne/error.hpp"
#include "graphtsne/gcn.hpp"
#include "graphtsne/io.hpp"

namespace gtsne {

namespace {
constexpr const char* kMagic = "GTSNE1";
}

void save_checkpoint(const std::filesystem::path& path, const GcnModel& model) {
  std::string out = std::string(kMagic) + "\n";
  out += "input_dim " + std::to_string(model.input_dim) + " hidden_dim " +
         std::to_string(model.hidden_dim) + " layers " + std::to_string(model.layers.size()) + "\n";
  char buf[40];
  auto emit = [&](const std::string& name, const Matrix& m) {
    out += "tensor " + name + " " + std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
    for (std::size_t r = 0; r < m.rows(); ++r) {
      for (std::size_t c = 0; c < m.cols(); ++c) {
        std::snprintf(buf, sizeof buf, c == 0 ? "%.17g" : " %.17g", m(r, c));
        out += buf;
      }
      out += "\n";
    }
  };
  model.visit_parameters([&](const std::string& n, const Matrix& m) { emit(n, m); });
  model.visit_buffers([&](const std::string& n, const Matrix& m) { emit(n, m); });
  out += "end\n";
  write_file_atomic(path, out);
}

GcnModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string source = path.string();
  std::string magic;
  if (!(in >> magic) || magic != kMagic) throw MalformedInput(source, 1, "missing GTSNE1 header");
  std::string k1, k2, k3;
  std::size_t input_dim = 0, hidden_dim = 0, layers = 0;
  if (!(in >> k1 >> input_dim >> k2 >> hidden_dim >> k3 >> layers) || k1 != "input_dim" ||
      k2 != "hidden_dim" || k3 != "layers")
    throw MalformedInput(source, 2, "bad dimension line");

  std::map<std::string, Matrix> tensors;
  std::string word;
  while (in >> word && word != "end") {
    if (word != "tensor") throw MalformedInput(source, 0, "expected 'tensor', got '" + word + "'");
    std::string name;
    std::size_t rows = 0, cols = 0;
    if (!(in >> name >> rows >> cols)) throw MalformedInput(source, 0, "bad tensor header");
    Matrix m(rows, cols);
    for (double& v : m.values())
      if (!(in >> v)) throw MalformedInput(source, 0, "truncated tensor " + name);
    tensors.emplace(name, std::move(m));
  }
  if (word != "end") throw MalformedInput(source, 0, "missing end marker");

  GcnModel model = init_model(input_dim, hidden_dim, 0, layers);
  auto assign = [&](const std::string& name, Matrix& m) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw MalformedInput(source, 0, "missing tensor " + name);
    if (!it->second.same_shape(m)) throw MalformedInput(source, 0, "shape mismatch for " + name);
    m = std::move(it->second);
    tensors.erase(it);
  };
  model.visit_parameters(assign);
  model.visit_buffers(assign);
  if (!tensors.empty()) throw MalformedInput(source, 0, "unknown tensor " + tensors.begin()->first);
  return model;
}

}  // namespace gtsne
