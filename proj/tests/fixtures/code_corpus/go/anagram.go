package main

import (
	"fmt"
	"sort"
	"strings"
)

func key(w string) string {
	cs := strings.Split(strings.ToLower(w), "")
	sort.Strings(cs)
	return strings.Join(cs, "")
}

func main() {
	words := []string{"listen", "silent", "enlist", "google", "banana"}
	groups := map[string][]string{}
	for _, w := range words {
		k := key(w)
		groups[k] = append(groups[k], w)
	}
	fmt.Println(len(groups))
}
