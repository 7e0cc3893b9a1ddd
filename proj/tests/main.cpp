#include <gtest/gtest.h>

#if defined(__linux__)
#include <malloc.h>
#endif

#include <climits>

int main(int argc, char** argv) {
#if defined(M_MMAP_THRESHOLD) && defined(M_TRIM_THRESHOLD)
  // Training loops allocate and free many short-lived matrices; keeping the
  // arena out of mmap territory avoids pathological page churn on one core.
  mallopt(M_MMAP_THRESHOLD, INT_MAX);
  mallopt(M_TRIM_THRESHOLD, INT_MAX);
#endif
  ::testing::InitGoogleTest(&argc, argv);
  return RUN_ALL_TESTS();
}
