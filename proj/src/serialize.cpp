#include "htbnn/serialize.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

namespace htbnn {

namespace {
constexpr const char* kHeader = "htbnn-network v1";
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void write_network(std::ostream& os, const Network& net) {
  const Architecture& a = net.architecture();
  os << kHeader << '\n' << a.depth() << '\n';
  for (std::size_t i = 0; i < a.widths().size(); ++i) os << (i ? " " : "") << a.widths()[i];
  os << '\n' << a.size() << '\n';
  for (Eigen::Index k = 0; k < net.coefficients().size(); ++k) os << format_double(net.coefficients()[k]) << '\n';
}

Network read_network(std::istream& is) {
  std::string header;
  std::getline(is, header);
  if (header != kHeader) throw StructuralError("not a network file: bad header");
  int depth = 0;
  if (!(is >> depth) || depth < 0) throw StructuralError("network file: bad depth");
  std::vector<int> widths(static_cast<std::size_t>(depth) + 2);
  for (auto& w : widths)
    if (!(is >> w)) throw StructuralError("network file: truncated widths");
  Architecture arch(depth, widths);
  std::size_t count = 0;
  if (!(is >> count) || count != arch.size()) throw StructuralError("network file: coefficient count mismatch");
  Eigen::VectorXd theta(static_cast<Eigen::Index>(count));
  std::string tok;
  for (std::size_t k = 0; k < count; ++k) {
    if (!(is >> tok)) throw StructuralError("network file: truncated coefficients");
    double v = 0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
      throw StructuralError("network file: bad coefficient '" + tok + "'");
    theta[static_cast<Eigen::Index>(k)] = v;
  }
  return Network(std::move(arch), std::move(theta));
}

void save_network(const std::string& path, const Network& net) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  write_network(os, net);
}

Network load_network(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_network(is);
}

}  // namespace htbnn
