"""Phase factors, evolution MPOs and the density-matrix step recursion."""
