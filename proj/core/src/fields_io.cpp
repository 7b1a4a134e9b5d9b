#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "tame/fields.hpp"

// On-disk container (little-endian):
//   magic   8 bytes  "TAMEFLD1"
//   u32     kind              0 scalar, 1 form, 2 metric
//   u32     dim
//   u32     topology          0 periodic, 1 box
//   u32     degree            forms only, else 0
//   f64     margin            box charts, else 0
//   u32[dim] resolution
//   f64[dim] extent
//   u64     values_per_node
//   f64[]   node-major, coefficient-minor payload
// Analytic evaluators are in-memory accelerators and are not serialized.

namespace tame::fields {

namespace {

constexpr char kMagic[8] = {'T', 'A', 'M', 'E', 'F', 'L', 'D', '1'};

template <typename T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("field file: truncated");
    return v;
}

void write_header(std::ostream& os, const Chart& chart, FieldKind kind, int degree,
                  std::uint64_t values_per_node) {
    os.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(kind));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(chart.dim));
    put<std::uint32_t>(os, chart.topology == Topology::periodic ? 0u : 1u);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(degree));
    put<double>(os, chart.topology == Topology::box ? chart.margin : 0.0);
    for (int a = 0; a < chart.dim; ++a) put<std::uint32_t>(os, static_cast<std::uint32_t>(chart.resolution[a]));
    for (int a = 0; a < chart.dim; ++a) put<double>(os, chart.extent[a]);
    put<std::uint64_t>(os, values_per_node);
}

void write_payload(std::ostream& os, const Eigen::MatrixXd& values) {
    for (Eigen::Index node = 0; node < values.rows(); ++node)
        for (Eigen::Index c = 0; c < values.cols(); ++c) put<double>(os, values(node, c));
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("field file: cannot open for writing: " + path);
    return os;
}

} // namespace

void write_field(const std::string& path, const ScalarField& f) {
    auto os = open_out(path);
    write_header(os, f.chart, FieldKind::scalar, 0, 1);
    for (Eigen::Index i = 0; i < f.values.size(); ++i) put<double>(os, f.values[i]);
}

void write_field(const std::string& path, const FormField& f) {
    auto os = open_out(path);
    write_header(os, f.chart, FieldKind::form, f.degree, static_cast<std::uint64_t>(f.values.cols()));
    write_payload(os, f.values);
}

void write_field(const std::string& path, const MetricField& f) {
    auto os = open_out(path);
    write_header(os, f.chart, FieldKind::metric, 0, static_cast<std::uint64_t>(f.values.cols()));
    write_payload(os, f.values);
}

AnyField read_field(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("field file: cannot open: " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("field file: bad magic: " + path);

    AnyField out;
    out.kind = static_cast<FieldKind>(get<std::uint32_t>(is));
    Chart chart;
    chart.dim = static_cast<int>(get<std::uint32_t>(is));
    chart.topology = get<std::uint32_t>(is) == 0 ? Topology::periodic : Topology::box;
    const int degree = static_cast<int>(get<std::uint32_t>(is));
    const double margin = get<double>(is);
    if (chart.topology == Topology::box) chart.margin = margin;
    if (chart.dim < 1 || chart.dim > kMaxDim) throw std::runtime_error("field file: bad dimension");
    for (int a = 0; a < chart.dim; ++a) chart.resolution[a] = static_cast<int>(get<std::uint32_t>(is));
    for (int a = 0; a < chart.dim; ++a) chart.extent[a] = get<double>(is);
    chart.validate();
    const std::uint64_t vpn = get<std::uint64_t>(is);
    const std::size_t nodes = chart.node_count();

    Eigen::MatrixXd values(static_cast<Eigen::Index>(nodes), static_cast<Eigen::Index>(vpn));
    for (std::size_t node = 0; node < nodes; ++node)
        for (std::uint64_t c = 0; c < vpn; ++c) values(static_cast<Eigen::Index>(node), static_cast<Eigen::Index>(c)) = get<double>(is);

    switch (out.kind) {
        case FieldKind::scalar:
            if (vpn != 1) throw std::runtime_error("field file: scalar payload width != 1");
            out.scalar.chart = chart;
            out.scalar.values = values.col(0);
            break;
        case FieldKind::form:
            if (vpn != binomial(chart.dim, degree))
                throw std::runtime_error("field file: form payload width mismatch");
            out.form.chart = chart;
            out.form.degree = degree;
            out.form.values = std::move(values);
            break;
        case FieldKind::metric:
            if (vpn != static_cast<std::uint64_t>(chart.dim) * chart.dim)
                throw std::runtime_error("field file: metric payload width mismatch");
            out.metric.chart = chart;
            out.metric.values = std::move(values);
            break;
        default: throw std::runtime_error("field file: unknown kind");
    }
    return out;
}

} // namespace tame::fields
