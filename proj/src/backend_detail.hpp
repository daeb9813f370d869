#pragma once

namespace menucsi::detail {

void count_http_request();

}  // namespace menucsi::detail
