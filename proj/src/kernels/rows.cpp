#include "siriette/kernels/rows.hpp"

namespace siriette::kernels {

ColumnView::ColumnView(const Column& c) : id_(c.type().id) {
  if (c.has_validity()) bits_ = c.validity()->data();
  switch (id_) {
    case TypeId::kInt64:
    case TypeId::kDecimal: i64_ = c.values<int64_t>().data(); break;
    case TypeId::kFloat64: f64_ = c.values<double>().data(); break;
    case TypeId::kDate32: i32_ = c.values<int32_t>().data(); break;
    case TypeId::kBool: u8_ = c.values<uint8_t>().data(); break;
    case TypeId::kString:
      offsets_ = c.strings().offsets.data();
      bytes_ = c.strings().bytes.data();
      break;
  }
}

}  // namespace siriette::kernels
