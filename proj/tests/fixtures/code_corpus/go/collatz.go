package main

import "fmt"

func collatzLen(n int) int {
	steps := 0
	for n != 1 {
		if n%2 == 0 {
			n /= 2
		} else {
			n = 3*n + 1
		}
		steps++
	}
	return steps
}

func main() {
	best, bestLen := 1, 0
	for i := 1; i < 1000; i++ {
		if l := collatzLen(i); l > bestLen {
			best, bestLen = i, l
		}
	}
	fmt.Println(best, bestLen)
}
