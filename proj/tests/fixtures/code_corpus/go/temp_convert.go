package main

import "fmt"

func cToF(c float64) float64 {
	return c*9/5 + 32
}

func main() {
	for _, c := range []float64{-40, 0, 37, 100} {
		fmt.Printf("%.1fC = %.1fF\n", c, cToF(c))
	}
}
