package main

import (
	"fmt"
	"sort"
	"strings"
)

func main() {
	text := "go gopher go run go build gopher"
	counts := map[string]int{}
	for _, w := range strings.Fields(text) {
		counts[w]++
	}
	words := make([]string, 0, len(counts))
	for w := range counts {
		words = append(words, w)
	}
	sort.Strings(words)
	for _, w := range words {
		fmt.Printf("%s=%d\n", w, counts[w])
	}
}
